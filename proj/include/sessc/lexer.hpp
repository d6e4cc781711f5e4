#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sessc/diagnostics.hpp"

namespace sessc {

enum class Tok : uint8_t {
    Ident,
    ChanIdent,    // $name
    IntLit,
    KwChoice, KwInt, KwBool, KwVoid,
    KwIf, KwElse, KwWhile, KwReturn,
    KwSend, KwRecv, KwSwitch, KwCase, KwClose, KwWait,
    KwTrue, KwFalse,
    LParen, RParen, LBrace, RBrace,
    Lt, Gt, Bang, Question,
    Semi, Comma, Dot, Colon, Assign,
    Plus, Minus, Star, Slash, Percent,
    Le, EqEq, Ne, AndAnd, OrOr,
    Eof,
};

const char* token_name(Tok t);

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    int64_t int_val = 0;
    SourceLoc loc;
};

struct LexResult {
    std::vector<Token> tokens;    // always terminated by Eof
    std::vector<Diagnostic> errors;
};

LexResult tokenize(const std::string& source);

}  // namespace sessc
