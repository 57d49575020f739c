#include "molcomm/sequence_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace molcomm {

SequenceRecord make_record(const OptProblem& problem, const OptResult& result) {
  SequenceRecord r;
  r.ts = problem.channel.ts;
  r.samples = problem.samples;
  r.power = problem.power;
  r.alpha = problem.alpha;
  r.beta = problem.beta;
  r.stop_time0 = problem.stop_time0;
  r.stop_time1 = problem.stop_time1;
  r.x1 = result.x1_hat;
  r.norm = result.norm;
  r.objective = result.objective;
  return r;
}

std::string to_json_string(const SequenceRecord& record) {
  nlohmann::ordered_json j;
  j["ts"] = record.ts;
  j["N"] = record.samples;
  j["P"] = record.power;
  j["alpha"] = record.alpha;
  j["beta"] = record.beta;
  j["T0"] = record.stop_time0;
  j["T1"] = record.stop_time1;
  j["x1"] = std::vector<double>(record.x1.data(), record.x1.data() + record.x1.size());
  j["norm"] = record.norm;
  j["objective"] = record.objective;
  return j.dump(2) + "\n";
}

SequenceRecord parse_sequence(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SequenceRecord r;
  r.ts = j.at("ts").get<double>();
  r.samples = j.at("N").get<int>();
  r.power = j.at("P").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.beta = j.at("beta").get<double>();
  r.stop_time0 = j.at("T0").get<int>();
  r.stop_time1 = j.at("T1").get<int>();
  const auto x = j.at("x1").get<std::vector<double>>();
  r.x1 = Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  r.norm = j.value("norm", r.x1.norm());
  r.objective = j.value("objective", 0.0);
  if (r.x1.size() != r.samples) throw std::runtime_error("sequence record: x1 length does not match N");
  return r;
}

void write_sequence(const std::filesystem::path& path, const SequenceRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sequence file " + path.string());
  out << to_json_string(record);
  if (!out) throw std::runtime_error("failed writing sequence file " + path.string());
}

SequenceRecord read_sequence(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open sequence file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_sequence(buffer.str());
}

std::string sequence_filename(double ts) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "seq_ts%g.json", ts);
  return buf;
}

}  // namespace molcomm
