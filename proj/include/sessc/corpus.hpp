#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sessc::corpus {

struct Entry {
    std::string name;       // e.g. "queue-notail"
    const char* source;
    int64_t default_param;  // the workload knob baked into main ("int n = ...")
};

const std::vector<Entry>& entries();
std::vector<std::string> names();
const Entry* find(const std::string& name);

// Source text with the first "int n = <k>;" of main replaced.
std::string source_with_param(const Entry& e, int64_t n);

}  // namespace sessc::corpus
