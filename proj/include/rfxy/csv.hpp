#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "rfxy/errors.hpp"

namespace rfxy {

/// CSV writer with 17-significant-digit floats so re-runs are byte-stable.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& stamp, const std::vector<std::string>& columns)
        : f_(std::fopen(path.c_str(), "wb")) {
        if (!f_) throw Error("CsvWriter: cannot open " + path);
        std::fprintf(f_, "# %s\n", stamp.c_str());
        for (size_t i = 0; i < columns.size(); ++i)
            std::fprintf(f_, "%s%s", i ? "," : "", columns[i].c_str());
        std::fprintf(f_, "\n");
    }
    ~CsvWriter() {
        if (f_) std::fclose(f_);
    }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<double>& values) {
        for (size_t i = 0; i < values.size(); ++i)
            std::fprintf(f_, "%s%.17g", i ? "," : "", values[i]);
        std::fprintf(f_, "\n");
    }

  private:
    FILE* f_ = nullptr;
};

} // namespace rfxy
