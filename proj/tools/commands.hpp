#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace cavityq::cli {

enum class TableFormat { Csv, Json };

struct GlobalOptions {
    std::filesystem::path out = ".";
    bool out_given = false;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    TableFormat format = TableFormat::Csv;
};

// Each command returns the process exit status on success and throws
// cavityq::Error on failure.
int cmd_device(const GlobalOptions& g, const std::filesystem::path& params_file);
int cmd_run(const GlobalOptions& g, const std::filesystem::path& circuit_file, const std::string& initial);
int cmd_qst(const GlobalOptions& g, const std::filesystem::path& config_file);
int cmd_grape(const GlobalOptions& g, const std::filesystem::path& config_file);
int cmd_code(const GlobalOptions& g, const std::filesystem::path& config_file);
int cmd_trotter(const GlobalOptions& g, const std::filesystem::path& config_file);
int cmd_otoc(const GlobalOptions& g, const std::filesystem::path& config_file);

} // namespace cavityq::cli
