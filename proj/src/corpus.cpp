#include "sessc/corpus.hpp"

#include <regex>

namespace sessc::corpus_data {
extern const char* const fib;
extern const char* const queue;
extern const char* const queue_notail;
extern const char* const primes;
extern const char* const atm;
extern const char* const pingpong;
}  // namespace sessc::corpus_data

namespace sessc::corpus {

const std::vector<Entry>& entries() {
    static const std::vector<Entry> all = {
        {"fib", corpus_data::fib, 23},
        {"queue", corpus_data::queue, 10000},
        {"queue-notail", corpus_data::queue_notail, 10000},
        {"primes", corpus_data::primes, 10000},
        {"atm", corpus_data::atm, 5000},
        {"pingpong", corpus_data::pingpong, 5000},
    };
    return all;
}

std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.name);
    return out;
}

const Entry* find(const std::string& name) {
    for (const auto& e : entries())
        if (e.name == name) return &e;
    return nullptr;
}

std::string source_with_param(const Entry& e, int64_t n) {
    static const std::regex knob(R"(int n = \d+;)");
    return std::regex_replace(std::string(e.source), knob,
                              "int n = " + std::to_string(n) + ";",
                              std::regex_constants::format_first_only);
}

}  // namespace sessc::corpus
