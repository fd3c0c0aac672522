// Internal helpers shared by the CLI commands.
#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bayeswin::cli::detail {

// 12 significant digits.
inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::vector<std::string> split_csv_line(std::string_view line);

// Files are written under a temporary name and renamed into place on
// commit(). Anything not committed is removed on destruction.
class StagedFiles {
public:
    explicit StagedFiles(std::filesystem::path dir);
    StagedFiles(const StagedFiles&) = delete;
    StagedFiles& operator=(const StagedFiles&) = delete;
    ~StagedFiles();

    void write(const std::string& name, std::string_view contents);
    void commit();

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
    bool committed_ = false;
};

}  // namespace bayeswin::cli::detail
