#include "sessc/parser.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include "sessc/lexer.hpp"

namespace sessc {

namespace {

class Parser {
public:
    Parser(std::vector<Token> tokens, std::string filename)
        : toks_(std::move(tokens)), filename_(std::move(filename)) {}

    ParseResult run() {
        ParseResult out;
        out.program.filename = filename_;
        while (!at(Tok::Eof)) {
            if (at(Tok::KwChoice)) {
                auto c = parse_choice_decl();
                if (c) out.program.choices.push_back(std::move(*c));
            } else if (at(Tok::Lt) || at(Tok::KwInt) || at(Tok::KwBool) || at(Tok::KwVoid)) {
                auto f = parse_func_decl();
                if (f) out.program.functions.push_back(std::move(*f));
            } else {
                error_here("expected a declaration ('choice', a return type, or a session type)");
                sync_decl();
            }
        }
        out.program.node_count = next_id_;
        resolve_spawns(out.program);
        out.errors = std::move(errors_);
        return out;
    }

    std::vector<Diagnostic> take_errors() { return std::move(errors_); }

    // Exposed for parse_session_type_text.
    std::optional<SessionType> parse_session_type() {
        SessionType t;
        if (!expect(Tok::Lt, "session type")) return std::nullopt;
        while (at(Tok::Bang) || at(Tok::Question)) {
            Direction dir = at(Tok::Bang) ? Direction::ToClient : Direction::ToProvider;
            advance();
            if (at(Tok::KwChoice)) {
                advance();
                if (!at(Tok::Ident)) {
                    error_here("expected a choice name");
                    return std::nullopt;
                }
                std::string name = advance().text;
                t.term = Terminator::choice_ref(name, dir);
                if (!expect(Tok::Gt, "session type")) return std::nullopt;
                return t;
            }
            Payload p;
            if (at(Tok::KwInt)) {
                advance();
                p = Payload::of_int();
            } else if (at(Tok::KwBool)) {
                advance();
                p = Payload::of_bool();
            } else if (at(Tok::Lt)) {
                auto inner = parse_session_type();
                if (!inner) return std::nullopt;
                p = Payload::of_chan(std::move(*inner));
            } else {
                error_here("expected 'int', 'bool', a session type, or 'choice'");
                return std::nullopt;
            }
            if (!expect(Tok::Semi, "session type action")) return std::nullopt;
            t.steps.push_back({dir, std::move(p)});
        }
        if (!expect(Tok::Gt, "session type")) return std::nullopt;
        t.term = Terminator::end();
        return t;
    }

private:
    // ---- token plumbing -------------------------------------------------

    const Token& peek(size_t off = 0) const {
        size_t i = std::min(pos_ + off, toks_.size() - 1);
        return toks_[i];
    }
    bool at(Tok k, size_t off = 0) const { return peek(off).kind == k; }
    const Token& advance() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    bool expect(Tok k, const char* what) {
        if (at(k)) {
            advance();
            return true;
        }
        std::ostringstream os;
        os << "expected " << token_name(k) << " in " << what << ", found "
           << token_name(peek().kind);
        error_here(os.str());
        return false;
    }

    void error_here(const std::string& msg) { errors_.push_back({peek().loc, msg}); }
    void error_at(SourceLoc loc, const std::string& msg) { errors_.push_back({loc, msg}); }

    // Skip to just after the next ';' (or stop before '}' / EOF).
    void sync_stmt() {
        while (!at(Tok::Eof)) {
            if (at(Tok::Semi)) {
                advance();
                return;
            }
            if (at(Tok::RBrace)) return;
            advance();
        }
    }

    void sync_decl() {
        while (!at(Tok::Eof)) {
            if (at(Tok::KwChoice) || at(Tok::KwInt) || at(Tok::KwBool) || at(Tok::KwVoid) ||
                at(Tok::Lt))
                return;
            advance();
        }
    }

    int fresh_id() { return next_id_++; }

    // ---- declarations ---------------------------------------------------

    std::optional<ChoiceDecl> parse_choice_decl() {
        ChoiceDecl decl;
        decl.loc = peek().loc;
        advance();    // 'choice'
        if (!at(Tok::Ident)) {
            error_here("expected a choice name");
            sync_decl();
            return std::nullopt;
        }
        decl.name = advance().text;
        if (!expect(Tok::LBrace, "choice declaration")) {
            sync_decl();
            return std::nullopt;
        }
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            ChoiceBranch branch;
            branch.loc = peek().loc;
            auto t = parse_session_type();
            if (!t) {
                sync_stmt();
                continue;
            }
            branch.body = std::move(*t);
            if (!at(Tok::Ident)) {
                error_here("expected a label name after the branch type");
                sync_stmt();
                continue;
            }
            branch.label = advance().text;
            expect(Tok::Semi, "choice branch");
            decl.branches.push_back(std::move(branch));
        }
        expect(Tok::RBrace, "choice declaration");
        if (decl.branches.empty())
            error_at(decl.loc, "choice '" + decl.name + "' needs at least one branch");
        return decl;
    }

    std::optional<FunctionDecl> parse_func_decl() {
        FunctionDecl fn;
        fn.loc = peek().loc;
        fn.id = fresh_id();
        if (at(Tok::Lt)) {
            auto t = parse_session_type();
            if (!t) {
                sync_decl();
                return std::nullopt;
            }
            fn.is_spawning = true;
            fn.provided_session = std::move(*t);
            if (!at(Tok::ChanIdent)) {
                error_here("expected a channel name ('$name') for the provided channel");
                sync_decl();
                return std::nullopt;
            }
            fn.provided_chan = advance().text;
            if (!at(Tok::Ident)) {
                error_here("expected the function name");
                sync_decl();
                return std::nullopt;
            }
            fn.name = advance().text;
        } else {
            fn.return_type = at(Tok::KwInt)    ? ValueType::Int
                             : at(Tok::KwBool) ? ValueType::Bool
                                               : ValueType::Void;
            advance();
            if (!at(Tok::Ident)) {
                error_here("expected the function name");
                sync_decl();
                return std::nullopt;
            }
            fn.name = advance().text;
        }
        if (!expect(Tok::LParen, "function declaration")) {
            sync_decl();
            return std::nullopt;
        }
        if (!at(Tok::RParen)) {
            while (true) {
                auto p = parse_param();
                if (p) fn.params.push_back(std::move(*p));
                if (at(Tok::Comma)) {
                    advance();
                    continue;
                }
                break;
            }
        }
        expect(Tok::RParen, "parameter list");
        auto body = parse_block();
        if (!body) {
            sync_decl();
            return std::nullopt;
        }
        fn.body = std::move(*body);
        return fn;
    }

    std::optional<Param> parse_param() {
        Param p;
        p.loc = peek().loc;
        if (at(Tok::KwInt) || at(Tok::KwBool)) {
            p.vtype = at(Tok::KwInt) ? ValueType::Int : ValueType::Bool;
            advance();
            if (!at(Tok::Ident)) {
                error_here("expected a parameter name");
                return std::nullopt;
            }
            p.name = advance().text;
            return p;
        }
        if (at(Tok::Lt)) {
            auto t = parse_session_type();
            if (!t) return std::nullopt;
            p.is_chan = true;
            p.session = std::move(*t);
            if (!at(Tok::ChanIdent)) {
                error_here("expected a channel parameter name ('$name')");
                return std::nullopt;
            }
            p.name = advance().text;
            return p;
        }
        error_here("expected a parameter ('int', 'bool', or a session type)");
        return std::nullopt;
    }

    // ---- statements -----------------------------------------------------

    std::optional<Block> parse_block() {
        if (!expect(Tok::LBrace, "block")) return std::nullopt;
        Block b;
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            auto s = parse_stmt();
            if (s)
                b.push_back(std::move(*s));
            else
                sync_stmt();
        }
        expect(Tok::RBrace, "block");
        return b;
    }

    StmtPtr make_stmt(Stmt::Kind k, SourceLoc loc) {
        auto s = std::make_unique<Stmt>();
        s->kind = k;
        s->loc = loc;
        s->id = fresh_id();
        return s;
    }

    std::optional<StmtPtr> parse_stmt() {
        SourceLoc loc = peek().loc;
        switch (peek().kind) {
            case Tok::KwIf: return parse_if();
            case Tok::KwWhile: return parse_while();
            case Tok::KwReturn: {
                advance();
                auto s = make_stmt(Stmt::Kind::Return, loc);
                if (!at(Tok::Semi)) {
                    auto e = parse_expr();
                    if (!e) return std::nullopt;
                    s->init = std::move(*e);
                }
                if (!expect(Tok::Semi, "return statement")) return std::nullopt;
                return s;
            }
            case Tok::KwSwitch: return parse_switch();
            case Tok::KwClose:
            case Tok::KwWait: {
                bool is_close = at(Tok::KwClose);
                advance();
                auto s = make_stmt(is_close ? Stmt::Kind::Close : Stmt::Kind::Wait, loc);
                if (!expect(Tok::LParen, "close/wait")) return std::nullopt;
                if (!at(Tok::ChanIdent)) {
                    error_here("expected a channel name");
                    return std::nullopt;
                }
                s->chan = advance().text;
                if (!expect(Tok::RParen, "close/wait")) return std::nullopt;
                if (!expect(Tok::Semi, "close/wait")) return std::nullopt;
                return s;
            }
            case Tok::KwSend: {
                advance();
                auto s = make_stmt(Stmt::Kind::Send, loc);
                if (!expect(Tok::LParen, "send")) return std::nullopt;
                if (!at(Tok::ChanIdent)) {
                    error_here("expected a channel name as the first send argument");
                    return std::nullopt;
                }
                s->chan = advance().text;
                if (!expect(Tok::Comma, "send")) return std::nullopt;
                auto e = parse_expr();
                if (!e) return std::nullopt;
                s->init = std::move(*e);
                if (!expect(Tok::RParen, "send")) return std::nullopt;
                if (!expect(Tok::Semi, "send")) return std::nullopt;
                return s;
            }
            case Tok::KwInt:
            case Tok::KwBool: {
                ValueType vt = at(Tok::KwInt) ? ValueType::Int : ValueType::Bool;
                advance();
                if (!at(Tok::Ident)) {
                    error_here("expected a variable name");
                    return std::nullopt;
                }
                std::string name = advance().text;
                if (!expect(Tok::Assign, "variable declaration")) return std::nullopt;
                return parse_decl_rhs(loc, /*is_chan=*/false, vt, SessionType{}, name);
            }
            case Tok::Lt: {
                auto t = parse_session_type();
                if (!t) return std::nullopt;
                if (!at(Tok::ChanIdent)) {
                    error_here("expected a channel name after the session type");
                    return std::nullopt;
                }
                std::string name = advance().text;
                if (!expect(Tok::Assign, "channel declaration")) return std::nullopt;
                return parse_decl_rhs(loc, /*is_chan=*/true, ValueType::Int, std::move(*t),
                                      name);
            }
            case Tok::ChanIdent: {
                std::string chan = advance().text;
                if (at(Tok::Dot)) {
                    advance();
                    if (!at(Tok::Ident)) {
                        error_here("expected a label after '.'");
                        return std::nullopt;
                    }
                    auto s = make_stmt(Stmt::Kind::SendLabel, loc);
                    s->chan = chan;
                    s->label = advance().text;
                    if (!expect(Tok::Semi, "label send")) return std::nullopt;
                    return s;
                }
                if (!expect(Tok::Assign, "channel statement")) return std::nullopt;
                if (at(Tok::ChanIdent)) {
                    auto s = make_stmt(Stmt::Kind::Forward, loc);
                    s->chan = chan;
                    s->chan2 = advance().text;
                    if (!expect(Tok::Semi, "forward")) return std::nullopt;
                    return s;
                }
                if (at(Tok::Ident) && at(Tok::LParen, 1)) {
                    auto s = make_stmt(Stmt::Kind::TailCall, loc);
                    s->chan = chan;
                    s->callee = advance().text;
                    advance();    // '('
                    if (!at(Tok::RParen)) {
                        while (true) {
                            auto e = parse_expr();
                            if (!e) return std::nullopt;
                            s->args.push_back(std::move(*e));
                            if (at(Tok::Comma)) {
                                advance();
                                continue;
                            }
                            break;
                        }
                    }
                    if (!expect(Tok::RParen, "call")) return std::nullopt;
                    if (!expect(Tok::Semi, "call")) return std::nullopt;
                    return s;
                }
                error_here("expected a channel or a spawning-function call after '='");
                return std::nullopt;
            }
            case Tok::Ident: {
                if (at(Tok::Assign, 1)) {
                    auto s = make_stmt(Stmt::Kind::Assign, loc);
                    s->name = advance().text;
                    advance();    // '='
                    auto e = parse_expr();
                    if (!e) return std::nullopt;
                    s->init = std::move(*e);
                    if (!expect(Tok::Semi, "assignment")) return std::nullopt;
                    return s;
                }
                auto e = parse_expr();
                if (!e) return std::nullopt;
                auto s = make_stmt(Stmt::Kind::ExprStmt, loc);
                s->init = std::move(*e);
                if (!expect(Tok::Semi, "expression statement")) return std::nullopt;
                return s;
            }
            default:
                error_here(std::string("expected a statement, found ") +
                           token_name(peek().kind));
                return std::nullopt;
        }
    }

    // Shared tail of "type name = ...;" — either a receive or an initializer.
    std::optional<StmtPtr> parse_decl_rhs(SourceLoc loc, bool is_chan, ValueType vt,
                                          SessionType session, std::string name) {
        if (at(Tok::KwRecv)) {
            advance();
            auto s = make_stmt(Stmt::Kind::Recv, loc);
            s->is_chan_recv = is_chan;
            s->value_type = vt;
            s->session = std::move(session);
            s->name = std::move(name);
            if (!expect(Tok::LParen, "recv")) return std::nullopt;
            if (!at(Tok::ChanIdent)) {
                error_here("expected a channel name in recv");
                return std::nullopt;
            }
            s->chan = advance().text;
            if (!expect(Tok::RParen, "recv")) return std::nullopt;
            if (!expect(Tok::Semi, "recv")) return std::nullopt;
            return s;
        }
        auto e = parse_expr();
        if (!e) return std::nullopt;
        auto s = make_stmt(is_chan ? Stmt::Kind::ChanDecl : Stmt::Kind::VarDecl, loc);
        s->value_type = vt;
        s->session = std::move(session);
        s->name = std::move(name);
        s->init = std::move(*e);
        if (!expect(Tok::Semi, "declaration")) return std::nullopt;
        return s;
    }

    std::optional<StmtPtr> parse_if() {
        SourceLoc loc = peek().loc;
        advance();    // 'if'
        auto s = make_stmt(Stmt::Kind::If, loc);
        if (!expect(Tok::LParen, "if")) return std::nullopt;
        auto cond = parse_expr();
        if (!cond) return std::nullopt;
        s->init = std::move(*cond);
        if (!expect(Tok::RParen, "if")) return std::nullopt;
        auto then_b = parse_block();
        if (!then_b) return std::nullopt;
        s->then_block = std::move(*then_b);
        if (at(Tok::KwElse)) {
            advance();
            if (at(Tok::KwIf)) {
                auto nested = parse_if();
                if (!nested) return std::nullopt;
                s->else_block.push_back(std::move(*nested));
            } else {
                auto else_b = parse_block();
                if (!else_b) return std::nullopt;
                s->else_block = std::move(*else_b);
            }
        }
        return s;
    }

    std::optional<StmtPtr> parse_while() {
        SourceLoc loc = peek().loc;
        advance();    // 'while'
        auto s = make_stmt(Stmt::Kind::While, loc);
        if (!expect(Tok::LParen, "while")) return std::nullopt;
        auto cond = parse_expr();
        if (!cond) return std::nullopt;
        s->init = std::move(*cond);
        if (!expect(Tok::RParen, "while")) return std::nullopt;
        auto body = parse_block();
        if (!body) return std::nullopt;
        s->then_block = std::move(*body);
        return s;
    }

    std::optional<StmtPtr> parse_switch() {
        SourceLoc loc = peek().loc;
        advance();    // 'switch'
        auto s = make_stmt(Stmt::Kind::SwitchChan, loc);
        if (!expect(Tok::LParen, "switch")) return std::nullopt;
        if (!at(Tok::ChanIdent)) {
            error_here("switch takes a channel");
            return std::nullopt;
        }
        s->chan = advance().text;
        if (!expect(Tok::RParen, "switch")) return std::nullopt;
        if (!expect(Tok::LBrace, "switch")) return std::nullopt;
        while (at(Tok::KwCase)) {
            SwitchCase c;
            c.loc = peek().loc;
            advance();
            if (!at(Tok::Ident)) {
                error_here("expected a label after 'case'");
                return std::nullopt;
            }
            c.label = advance().text;
            if (!expect(Tok::Colon, "switch case")) return std::nullopt;
            auto body = parse_block();
            if (!body) return std::nullopt;
            c.body = std::move(*body);
            s->cases.push_back(std::move(c));
        }
        if (s->cases.empty()) error_here("switch needs at least one case");
        if (!expect(Tok::RBrace, "switch")) return std::nullopt;
        return s;
    }

    // ---- expressions ----------------------------------------------------

    ExprPtr make_expr(Expr::Kind k, SourceLoc loc) {
        auto e = std::make_unique<Expr>();
        e->kind = k;
        e->loc = loc;
        e->id = fresh_id();
        return e;
    }

    std::optional<ExprPtr> parse_expr() { return parse_or(); }

    std::optional<ExprPtr> parse_or() {
        auto lhs = parse_and();
        if (!lhs) return std::nullopt;
        while (at(Tok::OrOr)) {
            SourceLoc loc = peek().loc;
            advance();
            auto rhs = parse_and();
            if (!rhs) return std::nullopt;
            auto e = make_expr(Expr::Kind::Binary, loc);
            e->op = BinOp::Or;
            e->lhs = std::move(*lhs);
            e->rhs = std::move(*rhs);
            lhs = std::move(e);
        }
        return lhs;
    }

    std::optional<ExprPtr> parse_and() {
        auto lhs = parse_equality();
        if (!lhs) return std::nullopt;
        while (at(Tok::AndAnd)) {
            SourceLoc loc = peek().loc;
            advance();
            auto rhs = parse_equality();
            if (!rhs) return std::nullopt;
            auto e = make_expr(Expr::Kind::Binary, loc);
            e->op = BinOp::And;
            e->lhs = std::move(*lhs);
            e->rhs = std::move(*rhs);
            lhs = std::move(e);
        }
        return lhs;
    }

    std::optional<ExprPtr> parse_equality() {
        auto lhs = parse_relational();
        if (!lhs) return std::nullopt;
        while (at(Tok::EqEq) || at(Tok::Ne)) {
            BinOp op = at(Tok::EqEq) ? BinOp::Eq : BinOp::Ne;
            SourceLoc loc = peek().loc;
            advance();
            auto rhs = parse_relational();
            if (!rhs) return std::nullopt;
            auto e = make_expr(Expr::Kind::Binary, loc);
            e->op = op;
            e->lhs = std::move(*lhs);
            e->rhs = std::move(*rhs);
            lhs = std::move(e);
        }
        return lhs;
    }

    std::optional<ExprPtr> parse_relational() {
        auto lhs = parse_additive();
        if (!lhs) return std::nullopt;
        while (at(Tok::Lt) || at(Tok::Le)) {
            BinOp op = at(Tok::Lt) ? BinOp::Lt : BinOp::Le;
            SourceLoc loc = peek().loc;
            advance();
            auto rhs = parse_additive();
            if (!rhs) return std::nullopt;
            auto e = make_expr(Expr::Kind::Binary, loc);
            e->op = op;
            e->lhs = std::move(*lhs);
            e->rhs = std::move(*rhs);
            lhs = std::move(e);
        }
        return lhs;
    }

    std::optional<ExprPtr> parse_additive() {
        auto lhs = parse_multiplicative();
        if (!lhs) return std::nullopt;
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
            SourceLoc loc = peek().loc;
            advance();
            auto rhs = parse_multiplicative();
            if (!rhs) return std::nullopt;
            auto e = make_expr(Expr::Kind::Binary, loc);
            e->op = op;
            e->lhs = std::move(*lhs);
            e->rhs = std::move(*rhs);
            lhs = std::move(e);
        }
        return lhs;
    }

    std::optional<ExprPtr> parse_multiplicative() {
        auto lhs = parse_primary();
        if (!lhs) return std::nullopt;
        while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
            BinOp op = at(Tok::Star)    ? BinOp::Mul
                       : at(Tok::Slash) ? BinOp::Div
                                        : BinOp::Mod;
            SourceLoc loc = peek().loc;
            advance();
            auto rhs = parse_primary();
            if (!rhs) return std::nullopt;
            auto e = make_expr(Expr::Kind::Binary, loc);
            e->op = op;
            e->lhs = std::move(*lhs);
            e->rhs = std::move(*rhs);
            lhs = std::move(e);
        }
        return lhs;
    }

    std::optional<ExprPtr> parse_primary() {
        SourceLoc loc = peek().loc;
        if (at(Tok::IntLit)) {
            auto e = make_expr(Expr::Kind::IntLit, loc);
            e->int_val = advance().int_val;
            return e;
        }
        if (at(Tok::KwTrue) || at(Tok::KwFalse)) {
            auto e = make_expr(Expr::Kind::BoolLit, loc);
            e->bool_val = at(Tok::KwTrue);
            advance();
            return e;
        }
        if (at(Tok::ChanIdent)) {
            auto e = make_expr(Expr::Kind::ChanVar, loc);
            e->name = advance().text;
            return e;
        }
        if (at(Tok::LParen)) {
            advance();
            auto e = parse_expr();
            if (!e) return std::nullopt;
            if (!expect(Tok::RParen, "parenthesized expression")) return std::nullopt;
            return e;
        }
        if (at(Tok::Ident)) {
            std::string name = advance().text;
            if (at(Tok::LParen)) {
                advance();
                auto e = make_expr(Expr::Kind::Call, loc);
                e->name = name;
                if (!at(Tok::RParen)) {
                    while (true) {
                        auto a = parse_expr();
                        if (!a) return std::nullopt;
                        e->args.push_back(std::move(*a));
                        if (at(Tok::Comma)) {
                            advance();
                            continue;
                        }
                        break;
                    }
                }
                if (!expect(Tok::RParen, "call")) return std::nullopt;
                return e;
            }
            auto e = make_expr(Expr::Kind::Var, loc);
            e->name = name;
            return e;
        }
        error_here(std::string("expected an expression, found ") + token_name(peek().kind));
        return std::nullopt;
    }

    // ---- post-parse fixups ----------------------------------------------

    static void resolve_expr(const Program& p, Expr& e) {
        if (e.lhs) resolve_expr(p, *e.lhs);
        if (e.rhs) resolve_expr(p, *e.rhs);
        for (auto& a : e.args) resolve_expr(p, *a);
        if (e.kind == Expr::Kind::Call) {
            const FunctionDecl* fn = p.find_function(e.name);
            if (fn && fn->is_spawning) e.kind = Expr::Kind::Spawn;
        }
    }

    static void resolve_block(const Program& p, Block& b) {
        for (auto& s : b) {
            if (s->init) resolve_expr(p, *s->init);
            for (auto& a : s->args) resolve_expr(p, *a);
            resolve_block(p, s->then_block);
            resolve_block(p, s->else_block);
            for (auto& c : s->cases) resolve_block(p, c.body);
        }
    }

    // Calls to spawning functions are spawn expressions.
    static void resolve_spawns(Program& p) {
        for (auto& f : p.functions) resolve_block(p, f.body);
    }

    std::vector<Token> toks_;
    std::string filename_;
    size_t pos_ = 0;
    int next_id_ = 0;
    std::vector<Diagnostic> errors_;
};

}  // namespace

ParseResult parse_program(const std::string& source, const std::string& filename) {
    LexResult lexed = tokenize(source);
    Parser parser(std::move(lexed.tokens), filename);
    ParseResult out = parser.run();
    // Lex errors come first.
    out.errors.insert(out.errors.begin(), lexed.errors.begin(), lexed.errors.end());
    out.program.filename = filename;
    return out;
}

std::optional<SessionType> parse_session_type_text(const std::string& text,
                                                   std::string* error) {
    LexResult lexed = tokenize(text);
    if (!lexed.errors.empty()) {
        if (error) *error = lexed.errors.front().message;
        return std::nullopt;
    }
    Parser parser(std::move(lexed.tokens), "<type>");
    auto t = parser.parse_session_type();
    auto errs = parser.take_errors();
    if (!t || !errs.empty()) {
        if (error) *error = errs.empty() ? "invalid session type" : errs.front().message;
        return std::nullopt;
    }
    return t;
}

}  // namespace sessc
