#include "io.hpp"

#include <fstream>
#include <stdexcept>
#include <system_error>

namespace bayeswin::cli::detail {

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            return fields;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

StagedFiles::StagedFiles(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
}

StagedFiles::~StagedFiles() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged_) std::filesystem::remove(tmp, ec);
}

void StagedFiles::write(const std::string& name, std::string_view contents) {
    const auto final_path = dir_ / name;
    auto tmp = final_path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        staged_.emplace_back(tmp, final_path);
        f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
}

void StagedFiles::commit() {
    for (const auto& [tmp, final_path] : staged_) std::filesystem::rename(tmp, final_path);
    committed_ = true;
}

}  // namespace bayeswin::cli::detail
