#pragma once

#include <string>
#include <vector>

namespace sessc {

struct SourceLoc {
    int line = 0;    // 1-based; 0 means "unknown"
    int col = 0;

    bool valid() const { return line > 0; }
};

struct Diagnostic {
    SourceLoc loc;
    std::string message;
};

// Renders "file:line:col: error: message".
std::string render_diagnostic(const std::string& filename, const Diagnostic& d);

std::string render_diagnostics(const std::string& filename,
                               const std::vector<Diagnostic>& ds);

}  // namespace sessc
