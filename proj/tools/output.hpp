#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dynrisk/experiments.hpp"

namespace dynrisk::cli {

/// "%.17g"; non-finite values print as nan, inf, -inf.
std::string format_double(double v);

std::string to_csv(const experiments::Table& table);

/// Writes through a temporary file and renames, so a failed run never
/// leaves a truncated output behind.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dynrisk::cli
