#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "molcomm/modulation.hpp"
#include "molcomm/optimizer.hpp"

namespace molcomm {

/// Stored optimized release sequence:
/// {ts, N, P, alpha, beta, T0, T1, x1: [...], norm, objective}.
struct SequenceRecord {
  double ts = 0.1;
  int samples = 20;
  double power = 100.0;
  double alpha = 1e-3;
  double beta = 1e-3;
  int stop_time0 = 5;
  int stop_time1 = 5;
  VectorXd x1;
  double norm = 0.0;
  double objective = 0.0;

  Modulation modulation() const { return {x1, power}; }
};

SequenceRecord make_record(const OptProblem& problem, const OptResult& result);

std::string to_json_string(const SequenceRecord& record);
SequenceRecord parse_sequence(const std::string& text);

void write_sequence(const std::filesystem::path& path, const SequenceRecord& record);
SequenceRecord read_sequence(const std::filesystem::path& path);

/// Conventional file name for the sequence optimized at slot duration ts.
std::string sequence_filename(double ts);

}  // namespace molcomm
