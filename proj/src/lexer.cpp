#include "sessc/lexer.hpp"

#include <cctype>
#include <map>

namespace sessc {

const char* token_name(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::ChanIdent: return "channel name";
        case Tok::IntLit: return "integer literal";
        case Tok::KwChoice: return "'choice'";
        case Tok::KwInt: return "'int'";
        case Tok::KwBool: return "'bool'";
        case Tok::KwVoid: return "'void'";
        case Tok::KwIf: return "'if'";
        case Tok::KwElse: return "'else'";
        case Tok::KwWhile: return "'while'";
        case Tok::KwReturn: return "'return'";
        case Tok::KwSend: return "'send'";
        case Tok::KwRecv: return "'recv'";
        case Tok::KwSwitch: return "'switch'";
        case Tok::KwCase: return "'case'";
        case Tok::KwClose: return "'close'";
        case Tok::KwWait: return "'wait'";
        case Tok::KwTrue: return "'true'";
        case Tok::KwFalse: return "'false'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Lt: return "'<'";
        case Tok::Gt: return "'>'";
        case Tok::Bang: return "'!'";
        case Tok::Question: return "'?'";
        case Tok::Semi: return "';'";
        case Tok::Comma: return "','";
        case Tok::Dot: return "'.'";
        case Tok::Colon: return "':'";
        case Tok::Assign: return "'='";
        case Tok::Plus: return "'+'";
        case Tok::Minus: return "'-'";
        case Tok::Star: return "'*'";
        case Tok::Slash: return "'/'";
        case Tok::Percent: return "'%'";
        case Tok::Le: return "'<='";
        case Tok::EqEq: return "'=='";
        case Tok::Ne: return "'!='";
        case Tok::AndAnd: return "'&&'";
        case Tok::OrOr: return "'||'";
        case Tok::Eof: return "end of file";
    }
    return "?";
}

namespace {

const std::map<std::string, Tok>& keywords() {
    static const std::map<std::string, Tok> kw = {
        {"choice", Tok::KwChoice}, {"int", Tok::KwInt},       {"bool", Tok::KwBool},
        {"void", Tok::KwVoid},     {"if", Tok::KwIf},         {"else", Tok::KwElse},
        {"while", Tok::KwWhile},   {"return", Tok::KwReturn}, {"send", Tok::KwSend},
        {"recv", Tok::KwRecv},     {"switch", Tok::KwSwitch}, {"case", Tok::KwCase},
        {"close", Tok::KwClose},   {"wait", Tok::KwWait},     {"true", Tok::KwTrue},
        {"false", Tok::KwFalse},
    };
    return kw;
}

struct Cursor {
    const std::string& src;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    bool eof() const { return pos >= src.size(); }
    char peek(size_t off = 0) const {
        return pos + off < src.size() ? src[pos + off] : '\0';
    }
    char advance() {
        char c = src[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }
    SourceLoc loc() const { return {line, col}; }
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_cont(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

LexResult tokenize(const std::string& source) {
    LexResult out;
    Cursor cur{source};

    auto push = [&](Tok kind, SourceLoc loc, std::string text = "", int64_t v = 0) {
        out.tokens.push_back({kind, std::move(text), v, loc});
    };

    while (!cur.eof()) {
        char c = cur.peek();
        SourceLoc loc = cur.loc();
        if (std::isspace(static_cast<unsigned char>(c))) {
            cur.advance();
            continue;
        }
        if (c == '/' && cur.peek(1) == '/') {
            while (!cur.eof() && cur.peek() != '\n') cur.advance();
            continue;
        }
        if (c == '/' && cur.peek(1) == '*') {
            cur.advance();
            cur.advance();
            bool closed = false;
            while (!cur.eof()) {
                if (cur.peek() == '*' && cur.peek(1) == '/') {
                    cur.advance();
                    cur.advance();
                    closed = true;
                    break;
                }
                cur.advance();
            }
            if (!closed) out.errors.push_back({loc, "unterminated block comment"});
            continue;
        }
        if (ident_start(c)) {
            std::string text;
            while (!cur.eof() && ident_cont(cur.peek())) text += cur.advance();
            auto it = keywords().find(text);
            if (it != keywords().end())
                push(it->second, loc, text);
            else
                push(Tok::Ident, loc, text);
            continue;
        }
        if (c == '$') {
            cur.advance();
            if (!ident_start(cur.peek())) {
                out.errors.push_back({loc, "expected a name after '$'"});
                continue;
            }
            std::string text = "$";
            while (!cur.eof() && ident_cont(cur.peek())) text += cur.advance();
            push(Tok::ChanIdent, loc, text);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string text;
            while (!cur.eof() && std::isdigit(static_cast<unsigned char>(cur.peek())))
                text += cur.advance();
            uint64_t v = 0;
            bool overflow = false;
            for (char d : text) {
                v = v * 10 + static_cast<uint64_t>(d - '0');
                if (v > static_cast<uint64_t>(INT64_MAX)) {
                    overflow = true;
                    break;
                }
            }
            if (overflow) {
                out.errors.push_back({loc, "integer literal out of range"});
                v = 0;
            }
            push(Tok::IntLit, loc, text, static_cast<int64_t>(v));
            continue;
        }
        cur.advance();
        switch (c) {
            case '(': push(Tok::LParen, loc); break;
            case ')': push(Tok::RParen, loc); break;
            case '{': push(Tok::LBrace, loc); break;
            case '}': push(Tok::RBrace, loc); break;
            case ';': push(Tok::Semi, loc); break;
            case ',': push(Tok::Comma, loc); break;
            case '.': push(Tok::Dot, loc); break;
            case ':': push(Tok::Colon, loc); break;
            case '>': push(Tok::Gt, loc); break;
            case '?': push(Tok::Question, loc); break;
            case '+': push(Tok::Plus, loc); break;
            case '-': push(Tok::Minus, loc); break;
            case '*': push(Tok::Star, loc); break;
            case '/': push(Tok::Slash, loc); break;
            case '%': push(Tok::Percent, loc); break;
            case '<':
                if (cur.peek() == '=') {
                    cur.advance();
                    push(Tok::Le, loc);
                } else {
                    push(Tok::Lt, loc);
                }
                break;
            case '=':
                if (cur.peek() == '=') {
                    cur.advance();
                    push(Tok::EqEq, loc);
                } else {
                    push(Tok::Assign, loc);
                }
                break;
            case '!':
                if (cur.peek() == '=') {
                    cur.advance();
                    push(Tok::Ne, loc);
                } else {
                    push(Tok::Bang, loc);
                }
                break;
            case '&':
                if (cur.peek() == '&') {
                    cur.advance();
                    push(Tok::AndAnd, loc);
                } else {
                    out.errors.push_back({loc, "stray '&' (did you mean '&&'?)"});
                }
                break;
            case '|':
                if (cur.peek() == '|') {
                    cur.advance();
                    push(Tok::OrOr, loc);
                } else {
                    out.errors.push_back({loc, "stray '|' (did you mean '||'?)"});
                }
                break;
            default: {
                std::string msg = "illegal character '";
                msg += c;
                msg += "'";
                out.errors.push_back({loc, msg});
                break;
            }
        }
    }
    out.tokens.push_back({Tok::Eof, "", 0, cur.loc()});
    return out;
}

}  // namespace sessc
