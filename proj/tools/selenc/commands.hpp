// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// The `selenc` command line: keygen, sensitivity, mask, train, budget,
// attack and bench.

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace selenc::cli {

enum class Format { csv, json_lines };

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  Format format = Format::csv;
  std::size_t threads = 1;  // after SELENC_THREADS is applied
};

// Parses argv and runs one subcommand. Returns the process exit code:
// 0 on success, 1 on a library error (reported on `err` as one JSON object),
// CLI11's codes for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "# selenc <version> config=<hash> seed=<seed>"
std::string header_line(const std::string& config_hash, std::uint64_t seed);

// CSV (optionally preceded by '#' comment lines) to JSON lines. Comment lines
// become one {"meta": "..."} record; numeric cells become numbers.
std::string csv_to_json_lines(const std::string& csv);

}  // namespace selenc::cli
