#include "sessc/diagnostics.hpp"

#include <sstream>

namespace sessc {

std::string render_diagnostic(const std::string& filename, const Diagnostic& d) {
    std::ostringstream os;
    os << filename << ":" << d.loc.line << ":" << d.loc.col << ": error: " << d.message;
    return os.str();
}

std::string render_diagnostics(const std::string& filename,
                               const std::vector<Diagnostic>& ds) {
    std::ostringstream os;
    for (const auto& d : ds) os << render_diagnostic(filename, d) << "\n";
    return os.str();
}

}  // namespace sessc
