#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sessc/ast.hpp"
#include "sessc/diagnostics.hpp"

namespace sessc {

struct ParseResult {
    Program program;
    std::vector<Diagnostic> errors;    // lex + parse diagnostics, in source order

    bool ok() const { return errors.empty(); }
};

// Parses a whole source file. Recovery happens at statement and declaration
// boundaries, so several errors can be reported in one pass.
ParseResult parse_program(const std::string& source,
                          const std::string& filename = "<memory>");

// Parses a bare session type such as "<!int; ?choice queue>".
std::optional<SessionType> parse_session_type_text(const std::string& text,
                                                   std::string* error = nullptr);

}  // namespace sessc
