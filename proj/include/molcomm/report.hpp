#pragma once

#include <filesystem>
#include <string>

#include "molcomm/harness.hpp"

namespace molcomm {

enum class PlotAxis { rate, sync_error };

inline constexpr const char* kCsvHeader =
    "scheme,mem_depth,R_bps,tau_s,tau_norm,bits,errors,ber,mean_stop_0,mean_stop_1,truncation_rate,seed";

std::string to_csv(const ResultTable& table);

/// Line plot, one polyline per (scheme, mem_depth), log10 BER on the y axis.
std::string to_svg(const ResultTable& table, PlotAxis axis);

/// Writes both files. Throws on an empty table or an unwritable path.
void emit_outputs(const ResultTable& table, const std::filesystem::path& csv_path,
                  const std::filesystem::path& svg_path, PlotAxis axis);

}  // namespace molcomm
