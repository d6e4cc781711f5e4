#include "sessc/ast.hpp"

#include <sstream>

namespace sessc {

const char* to_string(ValueType t) {
    switch (t) {
        case ValueType::Int: return "int";
        case ValueType::Bool: return "bool";
        case ValueType::Void: return "void";
    }
    return "?";
}

const char* to_string(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Mod: return "%";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::And: return "&&";
        case BinOp::Or: return "||";
    }
    return "?";
}

ChoiceEnv Program::choice_env() const {
    ChoiceEnv env;
    for (const auto& c : choices) env.add(c);
    return env;
}

const FunctionDecl* Program::find_function(const std::string& name) const {
    for (const auto& f : functions)
        if (f.name == name) return &f;
    return nullptr;
}

int Program::function_index(const std::string& name) const {
    for (size_t i = 0; i < functions.size(); ++i)
        if (functions[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

// Binding strength, used to parenthesize only where needed.
int precedence(BinOp op) {
    switch (op) {
        case BinOp::Or: return 1;
        case BinOp::And: return 2;
        case BinOp::Eq:
        case BinOp::Ne: return 3;
        case BinOp::Lt:
        case BinOp::Le: return 4;
        case BinOp::Add:
        case BinOp::Sub: return 5;
        case BinOp::Mul:
        case BinOp::Div:
        case BinOp::Mod: return 6;
    }
    return 0;
}

void print_expr(std::ostream& os, const Expr& e, int parent_prec) {
    switch (e.kind) {
        case Expr::Kind::IntLit: os << e.int_val; break;
        case Expr::Kind::BoolLit: os << (e.bool_val ? "true" : "false"); break;
        case Expr::Kind::Var:
        case Expr::Kind::ChanVar: os << e.name; break;
        case Expr::Kind::Binary: {
            int prec = precedence(e.op);
            bool paren = prec < parent_prec;
            if (paren) os << "(";
            print_expr(os, *e.lhs, prec);
            os << " " << to_string(e.op) << " ";
            print_expr(os, *e.rhs, prec + 1);
            if (paren) os << ")";
            break;
        }
        case Expr::Kind::Call:
        case Expr::Kind::Spawn: {
            os << e.name << "(";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) os << ", ";
                print_expr(os, *e.args[i], 0);
            }
            os << ")";
            break;
        }
    }
}

void print_block(std::ostream& os, const Block& b, int indent);

void print_stmt(std::ostream& os, const Stmt& s, int indent) {
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    os << pad;
    switch (s.kind) {
        case Stmt::Kind::VarDecl:
            os << to_string(s.value_type) << " " << s.name << " = ";
            print_expr(os, *s.init, 0);
            os << ";\n";
            break;
        case Stmt::Kind::ChanDecl:
            os << to_string(s.session) << " " << s.name << " = ";
            print_expr(os, *s.init, 0);
            os << ";\n";
            break;
        case Stmt::Kind::Assign:
            os << s.name << " = ";
            print_expr(os, *s.init, 0);
            os << ";\n";
            break;
        case Stmt::Kind::Send:
            os << "send(" << s.chan << ", ";
            print_expr(os, *s.init, 0);
            os << ");\n";
            break;
        case Stmt::Kind::SendLabel: os << s.chan << "." << s.label << ";\n"; break;
        case Stmt::Kind::Recv:
            if (s.is_chan_recv)
                os << to_string(s.session);
            else
                os << to_string(s.value_type);
            os << " " << s.name << " = recv(" << s.chan << ");\n";
            break;
        case Stmt::Kind::SwitchChan:
            os << "switch (" << s.chan << ") {\n";
            for (const auto& c : s.cases) {
                os << pad << "  case " << c.label << ": {\n";
                print_block(os, c.body, indent + 2);
                os << pad << "  }\n";
            }
            os << pad << "}\n";
            break;
        case Stmt::Kind::Close: os << "close(" << s.chan << ");\n"; break;
        case Stmt::Kind::Wait: os << "wait(" << s.chan << ");\n"; break;
        case Stmt::Kind::Forward: os << s.chan << " = " << s.chan2 << ";\n"; break;
        case Stmt::Kind::If:
            os << "if (";
            print_expr(os, *s.init, 0);
            os << ") {\n";
            print_block(os, s.then_block, indent + 1);
            os << pad << "}";
            if (!s.else_block.empty()) {
                os << " else {\n";
                print_block(os, s.else_block, indent + 1);
                os << pad << "}";
            }
            os << "\n";
            break;
        case Stmt::Kind::While:
            os << "while (";
            print_expr(os, *s.init, 0);
            os << ") {\n";
            print_block(os, s.then_block, indent + 1);
            os << pad << "}\n";
            break;
        case Stmt::Kind::Return:
            os << "return";
            if (s.init) {
                os << " ";
                print_expr(os, *s.init, 0);
            }
            os << ";\n";
            break;
        case Stmt::Kind::TailCall:
            os << s.chan << " = " << s.callee << "(";
            for (size_t i = 0; i < s.args.size(); ++i) {
                if (i) os << ", ";
                print_expr(os, *s.args[i], 0);
            }
            os << ");\n";
            break;
        case Stmt::Kind::ExprStmt:
            print_expr(os, *s.init, 0);
            os << ";\n";
            break;
    }
}

void print_block(std::ostream& os, const Block& b, int indent) {
    for (const auto& s : b) print_stmt(os, *s, indent);
}

}  // namespace

std::string pretty_print(const Program& p) {
    std::ostringstream os;
    for (const auto& c : p.choices) {
        os << "choice " << c.name << " {\n";
        for (const auto& b : c.branches)
            os << "  " << to_string(b.body) << " " << b.label << ";\n";
        os << "}\n\n";
    }
    for (const auto& f : p.functions) {
        if (f.is_spawning)
            os << to_string(f.provided_session) << " " << f.provided_chan << " " << f.name;
        else
            os << to_string(f.return_type) << " " << f.name;
        os << "(";
        for (size_t i = 0; i < f.params.size(); ++i) {
            if (i) os << ", ";
            const Param& prm = f.params[i];
            if (prm.is_chan)
                os << to_string(prm.session) << " " << prm.name;
            else
                os << to_string(prm.vtype) << " " << prm.name;
        }
        os << ") {\n";
        print_block(os, f.body, 1);
        os << "}\n\n";
    }
    return os.str();
}

namespace {

bool exprs_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::IntLit: return a.int_val == b.int_val;
        case Expr::Kind::BoolLit: return a.bool_val == b.bool_val;
        case Expr::Kind::Var:
        case Expr::Kind::ChanVar: return a.name == b.name;
        case Expr::Kind::Binary:
            return a.op == b.op && exprs_equal(*a.lhs, *b.lhs) && exprs_equal(*a.rhs, *b.rhs);
        case Expr::Kind::Call:
        case Expr::Kind::Spawn: {
            if (a.name != b.name || a.args.size() != b.args.size()) return false;
            for (size_t i = 0; i < a.args.size(); ++i)
                if (!exprs_equal(*a.args[i], *b.args[i])) return false;
            return true;
        }
    }
    return false;
}

bool blocks_equal(const Block& a, const Block& b);

bool stmts_equal(const Stmt& a, const Stmt& b) {
    if (a.kind != b.kind) return false;
    if (a.name != b.name || a.label != b.label || a.chan != b.chan || a.chan2 != b.chan2 ||
        a.callee != b.callee)
        return false;
    if (a.is_chan_recv != b.is_chan_recv) return false;
    if ((a.kind == Stmt::Kind::VarDecl || (a.kind == Stmt::Kind::Recv && !a.is_chan_recv)) &&
        a.value_type != b.value_type)
        return false;
    if ((a.kind == Stmt::Kind::ChanDecl || (a.kind == Stmt::Kind::Recv && a.is_chan_recv)) &&
        !types_equal(a.session, b.session))
        return false;
    if ((a.init == nullptr) != (b.init == nullptr)) return false;
    if (a.init && !exprs_equal(*a.init, *b.init)) return false;
    if (a.args.size() != b.args.size()) return false;
    for (size_t i = 0; i < a.args.size(); ++i)
        if (!exprs_equal(*a.args[i], *b.args[i])) return false;
    if (!blocks_equal(a.then_block, b.then_block)) return false;
    if (!blocks_equal(a.else_block, b.else_block)) return false;
    if (a.cases.size() != b.cases.size()) return false;
    for (size_t i = 0; i < a.cases.size(); ++i) {
        if (a.cases[i].label != b.cases[i].label) return false;
        if (!blocks_equal(a.cases[i].body, b.cases[i].body)) return false;
    }
    return true;
}

bool blocks_equal(const Block& a, const Block& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!stmts_equal(*a[i], *b[i])) return false;
    return true;
}

ExprPtr clone_expr(const Expr& e, int& next_id) {
    auto out = std::make_unique<Expr>();
    out->kind = e.kind;
    out->loc = e.loc;
    out->id = next_id++;
    out->int_val = e.int_val;
    out->bool_val = e.bool_val;
    out->name = e.name;
    out->op = e.op;
    if (e.lhs) out->lhs = clone_expr(*e.lhs, next_id);
    if (e.rhs) out->rhs = clone_expr(*e.rhs, next_id);
    for (const auto& a : e.args) out->args.push_back(clone_expr(*a, next_id));
    return out;
}

Block clone_block(const Block& b, int& next_id);

StmtPtr clone_stmt(const Stmt& s, int& next_id) {
    auto out = std::make_unique<Stmt>();
    out->kind = s.kind;
    out->loc = s.loc;
    out->id = next_id++;
    out->value_type = s.value_type;
    out->session = s.session;
    out->is_chan_recv = s.is_chan_recv;
    out->name = s.name;
    out->label = s.label;
    out->chan = s.chan;
    out->chan2 = s.chan2;
    out->callee = s.callee;
    if (s.init) out->init = clone_expr(*s.init, next_id);
    for (const auto& a : s.args) out->args.push_back(clone_expr(*a, next_id));
    out->then_block = clone_block(s.then_block, next_id);
    out->else_block = clone_block(s.else_block, next_id);
    for (const auto& c : s.cases)
        out->cases.push_back({c.label, c.loc, clone_block(c.body, next_id)});
    return out;
}

Block clone_block(const Block& b, int& next_id) {
    Block out;
    out.reserve(b.size());
    for (const auto& s : b) out.push_back(clone_stmt(*s, next_id));
    return out;
}

}  // namespace

bool programs_equal(const Program& a, const Program& b) {
    if (a.choices.size() != b.choices.size() || a.functions.size() != b.functions.size())
        return false;
    for (size_t i = 0; i < a.choices.size(); ++i) {
        const auto& ca = a.choices[i];
        const auto& cb = b.choices[i];
        if (ca.name != cb.name || ca.branches.size() != cb.branches.size()) return false;
        for (size_t j = 0; j < ca.branches.size(); ++j) {
            if (ca.branches[j].label != cb.branches[j].label) return false;
            if (!types_equal(ca.branches[j].body, cb.branches[j].body)) return false;
        }
    }
    for (size_t i = 0; i < a.functions.size(); ++i) {
        const auto& fa = a.functions[i];
        const auto& fb = b.functions[i];
        if (fa.name != fb.name || fa.is_spawning != fb.is_spawning) return false;
        if (fa.is_spawning) {
            if (fa.provided_chan != fb.provided_chan) return false;
            if (!types_equal(fa.provided_session, fb.provided_session)) return false;
        } else if (fa.return_type != fb.return_type) {
            return false;
        }
        if (fa.params.size() != fb.params.size()) return false;
        for (size_t j = 0; j < fa.params.size(); ++j) {
            const auto& pa = fa.params[j];
            const auto& pb = fb.params[j];
            if (pa.is_chan != pb.is_chan || pa.name != pb.name) return false;
            if (pa.is_chan) {
                if (!types_equal(pa.session, pb.session)) return false;
            } else if (pa.vtype != pb.vtype) {
                return false;
            }
        }
        if (!blocks_equal(fa.body, fb.body)) return false;
    }
    return true;
}

Program clone_program(const Program& p) {
    Program out;
    out.filename = p.filename;
    out.choices = p.choices;
    int next_id = 0;
    for (const auto& f : p.functions) {
        FunctionDecl nf;
        nf.name = f.name;
        nf.loc = f.loc;
        nf.id = next_id++;
        nf.is_spawning = f.is_spawning;
        nf.provided_session = f.provided_session;
        nf.provided_chan = f.provided_chan;
        nf.return_type = f.return_type;
        nf.params = f.params;
        nf.body = clone_block(f.body, next_id);
        out.functions.push_back(std::move(nf));
    }
    out.node_count = next_id;
    return out;
}

}  // namespace sessc
