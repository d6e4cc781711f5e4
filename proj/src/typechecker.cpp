#include "sessc/typechecker.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>

namespace sessc {

const char* to_string(TypeErrorKind k) {
    switch (k) {
        case TypeErrorKind::WrongOrder: return "WrongOrder";
        case TypeErrorKind::PayloadMismatch: return "PayloadMismatch";
        case TypeErrorKind::MissingCase: return "MissingCase";
        case TypeErrorKind::ExtraCase: return "ExtraCase";
        case TypeErrorKind::ActionAfterEnd: return "ActionAfterEnd";
        case TypeErrorKind::UnknownChoice: return "UnknownChoice";
        case TypeErrorKind::UnknownLabel: return "UnknownLabel";
        case TypeErrorKind::Unconsumed: return "Unconsumed";
        case TypeErrorKind::UseAfterConsume: return "UseAfterConsume";
        case TypeErrorKind::DuplicateUse: return "DuplicateUse";
        case TypeErrorKind::JoinMismatch: return "JoinMismatch";
        case TypeErrorKind::NotLeaf: return "NotLeaf";
        case TypeErrorKind::ForwardTypeMismatch: return "ForwardTypeMismatch";
        case TypeErrorKind::ForwardRoleError: return "ForwardRoleError";
        case TypeErrorKind::ForwardAtEnd: return "ForwardAtEnd";
        case TypeErrorKind::TailPositionError: return "TailPositionError";
        case TypeErrorKind::UnknownFunction: return "UnknownFunction";
        case TypeErrorKind::UnknownVariable: return "UnknownVariable";
        case TypeErrorKind::ArityMismatch: return "ArityMismatch";
        case TypeErrorKind::TypeMismatch: return "TypeMismatch";
        case TypeErrorKind::ChannelMisuse: return "ChannelMisuse";
        case TypeErrorKind::MainShape: return "MainShape";
        case TypeErrorKind::DuplicateDefinition: return "DuplicateDefinition";
        case TypeErrorKind::Unreachable: return "Unreachable";
    }
    return "TypeError";
}

Diagnostic to_diagnostic(const TypeError& e) { return {e.loc, e.message}; }

std::vector<Diagnostic> CheckResult::diagnostics() const {
    std::vector<Diagnostic> out;
    out.reserve(errors.size());
    for (const auto& e : errors) out.push_back(to_diagnostic(e));
    return out;
}

namespace {

struct Ctx {
    std::map<std::string, ChannelState> chans;
    std::map<std::string, ValueType> vals;
};

bool chan_maps_equal(const std::map<std::string, ChannelState>& a,
                     const std::map<std::string, ChannelState>& b,
                     std::string* detail) {
    for (const auto& [name, st] : a) {
        auto it = b.find(name);
        if (it == b.end()) {
            if (detail) *detail = name + " is consumed on one path but live on another";
            return false;
        }
        if (st.role != it->second.role ||
            !types_equal(st.remaining, it->second.remaining)) {
            if (detail)
                *detail = name + " ends at " + to_string(st.remaining) + " on one path and " +
                          to_string(it->second.remaining) + " on another";
            return false;
        }
    }
    for (const auto& [name, st] : b) {
        (void)st;
        if (!a.count(name)) {
            if (detail) *detail = name + " is consumed on one path but live on another";
            return false;
        }
    }
    return true;
}

class Checker {
public:
    explicit Checker(const Program& p) : prog_(p), env_(p.choice_env()) {}

    CheckResult run() {
        ann_.has_dir.assign(static_cast<size_t>(prog_.node_count), 0);
        ann_.dir.assign(static_cast<size_t>(prog_.node_count), Direction::ToClient);
        check_declarations();
        for (const auto& f : prog_.functions) check_function(f);
        CheckResult out;
        out.errors = std::move(errors_);
        out.ok = out.errors.empty();
        out.annotations = std::move(ann_);
        return out;
    }

private:
    // ---- error helpers ----------------------------------------------------

    void err(TypeErrorKind kind, SourceLoc loc, const std::string& subject,
             const std::string& detail = "") {
        std::string msg = std::string(to_string(kind)) + "(" + subject + ")";
        if (!detail.empty()) msg += ": " + detail;
        errors_.push_back({kind, loc, std::move(msg)});
    }

    // ---- declaration-level checks ------------------------------------------

    void validate_session(const SessionType& t, SourceLoc loc) {
        for (const auto& name : undeclared_choices(env_, t))
            err(TypeErrorKind::UnknownChoice, loc, name, "choice is never declared");
        for (const auto& a : t.steps)
            if (a.payload.tag == PayloadTag::Chan) validate_session(*a.payload.chan, loc);
    }

    void check_declarations() {
        std::set<std::string> choice_names;
        for (const auto& c : prog_.choices) {
            if (!choice_names.insert(c.name).second)
                err(TypeErrorKind::DuplicateDefinition, c.loc, c.name,
                    "choice is declared twice");
            std::set<std::string> labels;
            for (const auto& b : c.branches) {
                if (!labels.insert(b.label).second)
                    err(TypeErrorKind::DuplicateDefinition, b.loc, c.name + "." + b.label,
                        "label is declared twice");
                validate_session(b.body, b.loc);
            }
        }
        std::set<std::string> fn_names;
        for (const auto& f : prog_.functions) {
            if (f.name == "print")
                err(TypeErrorKind::DuplicateDefinition, f.loc, f.name,
                    "print is a builtin");
            if (!fn_names.insert(f.name).second)
                err(TypeErrorKind::DuplicateDefinition, f.loc, f.name,
                    "function is declared twice");
            if (f.is_spawning) validate_session(f.provided_session, f.loc);
            std::set<std::string> param_names;
            for (const auto& p : f.params) {
                if (!param_names.insert(p.name).second)
                    err(TypeErrorKind::DuplicateDefinition, p.loc, p.name,
                        "parameter is declared twice");
                if (p.is_chan) {
                    validate_session(p.session, p.loc);
                    if (!f.is_spawning)
                        err(TypeErrorKind::ChannelMisuse, p.loc, p.name,
                            "channel parameters require a provided channel");
                }
            }
        }
        const FunctionDecl* main_fn = prog_.find_function("main");
        if (!main_fn) {
            err(TypeErrorKind::MainShape, SourceLoc{1, 1}, "main",
                "program needs an 'int main()'");
        } else if (main_fn->is_spawning || main_fn->return_type != ValueType::Int ||
                   !main_fn->params.empty()) {
            err(TypeErrorKind::MainShape, main_fn->loc, "main",
                "main must be 'int main()' with no parameters");
        }
    }

    // ---- expression checking ------------------------------------------------

    // Value-typed expression; channels are rejected here (their legal positions
    // are handled by the statement rules).
    std::optional<ValueType> check_value_expr(const Expr& e, Ctx& ctx) {
        switch (e.kind) {
            case Expr::Kind::IntLit: return ValueType::Int;
            case Expr::Kind::BoolLit: return ValueType::Bool;
            case Expr::Kind::Var: {
                auto it = ctx.vals.find(e.name);
                if (it == ctx.vals.end()) {
                    err(TypeErrorKind::UnknownVariable, e.loc, e.name);
                    return std::nullopt;
                }
                return it->second;
            }
            case Expr::Kind::ChanVar:
                err(TypeErrorKind::ChannelMisuse, e.loc, e.name,
                    "channel endpoint used as a value");
                return std::nullopt;
            case Expr::Kind::Binary: {
                auto lt = check_value_expr(*e.lhs, ctx);
                auto rt = check_value_expr(*e.rhs, ctx);
                if (!lt || !rt) return std::nullopt;
                switch (e.op) {
                    case BinOp::Add:
                    case BinOp::Sub:
                    case BinOp::Mul:
                    case BinOp::Div:
                    case BinOp::Mod:
                        if (*lt != ValueType::Int || *rt != ValueType::Int) {
                            err(TypeErrorKind::TypeMismatch, e.loc, to_string(e.op),
                                "arithmetic needs int operands");
                            return std::nullopt;
                        }
                        return ValueType::Int;
                    case BinOp::Lt:
                    case BinOp::Le:
                        if (*lt != ValueType::Int || *rt != ValueType::Int) {
                            err(TypeErrorKind::TypeMismatch, e.loc, to_string(e.op),
                                "comparison needs int operands");
                            return std::nullopt;
                        }
                        return ValueType::Bool;
                    case BinOp::Eq:
                    case BinOp::Ne:
                        if (*lt != *rt || *lt == ValueType::Void) {
                            err(TypeErrorKind::TypeMismatch, e.loc, to_string(e.op),
                                "equality needs matching int or bool operands");
                            return std::nullopt;
                        }
                        return ValueType::Bool;
                    case BinOp::And:
                    case BinOp::Or:
                        if (*lt != ValueType::Bool || *rt != ValueType::Bool) {
                            err(TypeErrorKind::TypeMismatch, e.loc, to_string(e.op),
                                "logical operators need bool operands");
                            return std::nullopt;
                        }
                        return ValueType::Bool;
                }
                return std::nullopt;
            }
            case Expr::Kind::Call: {
                if (e.name == "print") {
                    if (e.args.size() != 1) {
                        err(TypeErrorKind::ArityMismatch, e.loc, "print", "print takes one int");
                        return std::nullopt;
                    }
                    auto at = check_value_expr(*e.args[0], ctx);
                    if (at && *at != ValueType::Int)
                        err(TypeErrorKind::TypeMismatch, e.loc, "print", "print takes an int");
                    if (!cur_fn_ || cur_fn_->name != "main")
                        err(TypeErrorKind::ChannelMisuse, e.loc, "print",
                            "print is only available in main");
                    return ValueType::Void;
                }
                const FunctionDecl* callee = prog_.find_function(e.name);
                if (!callee) {
                    err(TypeErrorKind::UnknownFunction, e.loc, e.name);
                    return std::nullopt;
                }
                ann_.callee_index[e.id] = prog_.function_index(e.name);
                if (e.args.size() != callee->params.size()) {
                    err(TypeErrorKind::ArityMismatch, e.loc, e.name,
                        "expected " + std::to_string(callee->params.size()) + " arguments");
                    return std::nullopt;
                }
                for (size_t i = 0; i < e.args.size(); ++i) {
                    const Param& p = callee->params[i];
                    if (p.is_chan) {
                        err(TypeErrorKind::ChannelMisuse, e.args[i]->loc, p.name,
                            "channels may only be passed to spawning functions");
                        continue;
                    }
                    auto at = check_value_expr(*e.args[i], ctx);
                    if (at && *at != p.vtype)
                        err(TypeErrorKind::TypeMismatch, e.args[i]->loc, p.name,
                            std::string("argument must be ") + to_string(p.vtype));
                }
                return callee->return_type;
            }
            case Expr::Kind::Spawn:
                err(TypeErrorKind::ChannelMisuse, e.loc, e.name,
                    "a spawned channel must be bound by a channel declaration");
                return std::nullopt;
        }
        return std::nullopt;
    }

    // ---- channel bookkeeping -------------------------------------------------

    ChannelState* lookup_chan(Ctx& ctx, const std::string& name, SourceLoc loc) {
        auto it = ctx.chans.find(name);
        if (it == ctx.chans.end()) {
            if (poisoned_.count(name)) return nullptr;
            if (consumed_.count(name))
                err(TypeErrorKind::UseAfterConsume, loc, name,
                    "channel was already consumed");
            else
                err(TypeErrorKind::UnknownVariable, loc, name);
            return nullptr;
        }
        if (!used_this_stmt_.insert(name).second) {
            err(TypeErrorKind::DuplicateUse, loc, name,
                "channel used twice in one statement");
            return nullptr;
        }
        return &it->second;
    }

    void consume(Ctx& ctx, const std::string& name, SourceLoc loc) {
        ctx.chans.erase(name);
        consumed_[name] = loc;
    }

    void poison(Ctx& ctx, const std::string& name) {
        ctx.chans.erase(name);
        consumed_.erase(name);
        poisoned_.insert(name);
    }

    bool bindable(Ctx& ctx, const std::string& name, SourceLoc loc) {
        if (ctx.chans.count(name) || ctx.vals.count(name)) {
            err(TypeErrorKind::DuplicateDefinition, loc, name, "name is already bound");
            return false;
        }
        consumed_.erase(name);
        poisoned_.erase(name);
        return true;
    }

    // Whether the current role sends for a transmission in direction d.
    static bool sender_side(Role role, Direction d) {
        return (role == Role::Provider && d == Direction::ToClient) ||
               (role == Role::Client && d == Direction::ToProvider);
    }

    // The head transmission, provided the state is at a plain step.
    // Reports the right fidelity error and poisons the channel otherwise.
    const Action* head_action(Ctx& ctx, const std::string& name, ChannelState* st,
                              SourceLoc loc, const char* what) {
        if (!st->remaining.steps.empty()) return &st->remaining.steps.front();
        if (st->remaining.term.kind == TermKind::End)
            err(TypeErrorKind::ActionAfterEnd, loc, name,
                std::string(what) + " after the session has ended");
        else
            err(TypeErrorKind::WrongOrder, loc, name,
                std::string(what) + " but the session is at a choice point");
        poison(ctx, name);
        return nullptr;
    }

    void set_dir(int node_id, Direction d) {
        ann_.has_dir[static_cast<size_t>(node_id)] = 1;
        ann_.dir[static_cast<size_t>(node_id)] = d;
    }

    // Argument checking shared by spawns and tail calls. Channel arguments are
    // consumed from the context.
    void check_call_args(const FunctionDecl& callee, const std::vector<ExprPtr>& args,
                         SourceLoc loc, Ctx& ctx) {
        if (args.size() != callee.params.size()) {
            err(TypeErrorKind::ArityMismatch, loc, callee.name,
                "expected " + std::to_string(callee.params.size()) + " arguments");
            return;
        }
        for (size_t i = 0; i < args.size(); ++i) {
            const Param& p = callee.params[i];
            const Expr& a = *args[i];
            if (p.is_chan) {
                if (a.kind != Expr::Kind::ChanVar) {
                    err(TypeErrorKind::TypeMismatch, a.loc, p.name,
                        "channel arguments must be channel variables");
                    continue;
                }
                ChannelState* st = lookup_chan(ctx, a.name, a.loc);
                if (!st) continue;
                if (st->role != Role::Client) {
                    err(TypeErrorKind::ChannelMisuse, a.loc, a.name,
                        "a provided channel can only move through a tail call or forward");
                    continue;
                }
                if (!types_equal(st->remaining, p.session)) {
                    err(TypeErrorKind::TypeMismatch, a.loc, a.name,
                        "argument session is " + to_string(st->remaining) + " but " +
                            p.name + " needs " + to_string(p.session));
                    continue;
                }
                consume(ctx, a.name, a.loc);
            } else {
                auto at = check_value_expr(a, ctx);
                if (at && *at != p.vtype)
                    err(TypeErrorKind::TypeMismatch, a.loc, p.name,
                        std::string("argument must be ") + to_string(p.vtype));
            }
        }
    }

    // ---- statements ---------------------------------------------------------

    // nullopt means the path never falls through (return / forward / tail call
    // / endless loop).
    std::optional<Ctx> check_block(const Block& block, Ctx ctx) {
        std::set<std::string> chans_before;
        for (const auto& [name, st] : ctx.chans) {
            (void)st;
            chans_before.insert(name);
        }
        std::set<std::string> vals_before;
        for (const auto& [name, vt] : ctx.vals) {
            (void)vt;
            vals_before.insert(name);
        }
        for (size_t i = 0; i < block.size(); ++i) {
            auto next = check_stmt(*block[i], std::move(ctx));
            if (!next) {
                if (i + 1 < block.size()) {
                    const Stmt& follower = *block[i + 1];
                    if (block[i]->kind == Stmt::Kind::TailCall)
                        err(TypeErrorKind::TailPositionError, follower.loc, block[i]->chan,
                            "a tail call must be the last action of its path");
                    else
                        err(TypeErrorKind::Unreachable, follower.loc, "statement",
                            "no path reaches this statement");
                }
                return std::nullopt;
            }
            ctx = std::move(*next);
        }
        // Scope exit: names declared in this block disappear.
        for (auto it = ctx.chans.begin(); it != ctx.chans.end();) {
            if (!chans_before.count(it->first)) {
                err(TypeErrorKind::Unconsumed, it->second.bind_loc, it->first,
                    "channel goes out of scope without being consumed");
                it = ctx.chans.erase(it);
            } else {
                ++it;
            }
        }
        for (auto it = ctx.vals.begin(); it != ctx.vals.end();) {
            if (!vals_before.count(it->first))
                it = ctx.vals.erase(it);
            else
                ++it;
        }
        return ctx;
    }

    std::optional<Ctx> check_stmt(const Stmt& s, Ctx ctx) {
        used_this_stmt_.clear();
        switch (s.kind) {
            case Stmt::Kind::VarDecl: {
                auto vt = check_value_expr(*s.init, ctx);
                if (vt && *vt != s.value_type)
                    err(TypeErrorKind::TypeMismatch, s.loc, s.name,
                        std::string("initializer must be ") + to_string(s.value_type));
                if (bindable(ctx, s.name, s.loc)) ctx.vals[s.name] = s.value_type;
                return ctx;
            }
            case Stmt::Kind::ChanDecl: {
                if (s.init->kind != Expr::Kind::Spawn) {
                    if (s.init->kind == Expr::Kind::Call &&
                        !prog_.find_function(s.init->name))
                        err(TypeErrorKind::UnknownFunction, s.init->loc, s.init->name);
                    else
                        err(TypeErrorKind::TypeMismatch, s.loc, s.name,
                            "channel declarations are initialized by spawning calls");
                    return ctx;
                }
                const Expr& sp = *s.init;
                const FunctionDecl* callee = prog_.find_function(sp.name);
                assert(callee && callee->is_spawning);
                check_call_args(*callee, sp.args, sp.loc, ctx);
                if (!types_equal(s.session, callee->provided_session))
                    err(TypeErrorKind::TypeMismatch, s.loc, s.name,
                        "declared session " + to_string(s.session) + " but " + sp.name +
                            " provides " + to_string(callee->provided_session));
                Annotations::SpawnInfo info;
                info.width = infer_width(env_, callee->provided_session);
                info.init_dir = initial_direction(env_, callee->provided_session);
                info.callee = prog_.function_index(sp.name);
                ann_.spawns[sp.id] = info;
                if (bindable(ctx, s.name, s.loc))
                    ctx.chans[s.name] =
                        ChannelState{callee->provided_session, Role::Client, s.loc};
                return ctx;
            }
            case Stmt::Kind::Assign: {
                auto it = ctx.vals.find(s.name);
                if (it == ctx.vals.end()) {
                    err(TypeErrorKind::UnknownVariable, s.loc, s.name);
                    check_value_expr(*s.init, ctx);
                    return ctx;
                }
                auto vt = check_value_expr(*s.init, ctx);
                if (vt && *vt != it->second)
                    err(TypeErrorKind::TypeMismatch, s.loc, s.name,
                        std::string("assignment must be ") + to_string(it->second));
                return ctx;
            }
            case Stmt::Kind::Send: return check_send(s, std::move(ctx));
            case Stmt::Kind::Recv: return check_recv(s, std::move(ctx));
            case Stmt::Kind::SendLabel: return check_send_label(s, std::move(ctx));
            case Stmt::Kind::SwitchChan: return check_switch(s, std::move(ctx));
            case Stmt::Kind::Close: return check_close(s, std::move(ctx));
            case Stmt::Kind::Wait: return check_wait(s, std::move(ctx));
            case Stmt::Kind::Forward: return check_forward(s, std::move(ctx));
            case Stmt::Kind::If: return check_if(s, std::move(ctx));
            case Stmt::Kind::While: return check_while(s, std::move(ctx));
            case Stmt::Kind::Return: return check_return(s, std::move(ctx));
            case Stmt::Kind::TailCall: return check_tail_call(s, std::move(ctx));
            case Stmt::Kind::ExprStmt: {
                check_value_expr(*s.init, ctx);
                return ctx;
            }
        }
        return ctx;
    }

    std::optional<Ctx> check_send(const Stmt& s, Ctx ctx) {
        ChannelState* st = lookup_chan(ctx, s.chan, s.loc);
        if (!st) {
            if (s.init->kind != Expr::Kind::ChanVar) check_value_expr(*s.init, ctx);
            return ctx;
        }
        const Action* act = head_action(ctx, s.chan, st, s.loc, "send");
        if (!act) return ctx;
        if (!sender_side(st->role, act->dir)) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                std::string("this side receives next (") + to_string(st->role) +
                    " at " + to_string(st->remaining) + ")");
            poison(ctx, s.chan);
            return ctx;
        }
        if (act->payload.tag == PayloadTag::Chan) {
            if (s.init->kind != Expr::Kind::ChanVar) {
                err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                    "session expects a channel payload");
            } else {
                ChannelState* payload = lookup_chan(ctx, s.init->name, s.init->loc);
                if (payload) {
                    if (payload->role != Role::Client) {
                        err(TypeErrorKind::ChannelMisuse, s.init->loc, s.init->name,
                            "only a client endpoint can be sent along a channel");
                    } else if (!types_equal(payload->remaining, *act->payload.chan)) {
                        err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                            "payload session is " + to_string(payload->remaining) +
                                " but the type needs " + to_string(*act->payload.chan));
                    } else {
                        consume(ctx, s.init->name, s.init->loc);
                    }
                }
            }
        } else {
            ValueType want =
                act->payload.tag == PayloadTag::Int ? ValueType::Int : ValueType::Bool;
            if (s.init->kind == Expr::Kind::ChanVar) {
                err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                    std::string("session expects ") + to_string(want) +
                        ", not a channel");
            } else {
                auto vt = check_value_expr(*s.init, ctx);
                if (vt && *vt != want)
                    err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                        std::string("session expects ") + to_string(want) + ", payload is " +
                            to_string(*vt));
            }
        }
        set_dir(s.id, act->dir);
        ann_.send_kinds[s.id] = act->payload.tag;
        st = &ctx.chans.at(s.chan);    // poison-free path keeps the entry
        st->remaining.steps.erase(st->remaining.steps.begin());
        return ctx;
    }

    std::optional<Ctx> check_recv(const Stmt& s, Ctx ctx) {
        ChannelState* st = lookup_chan(ctx, s.chan, s.loc);
        if (!st) return ctx;
        const Action* act = head_action(ctx, s.chan, st, s.loc, "recv");
        if (!act) return ctx;
        if (sender_side(st->role, act->dir)) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                std::string("this side sends next (") + to_string(st->role) + " at " +
                    to_string(st->remaining) + ")");
            poison(ctx, s.chan);
            return ctx;
        }
        Direction d = act->dir;
        if (s.is_chan_recv) {
            if (act->payload.tag != PayloadTag::Chan) {
                err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                    "session carries a value here, not a channel");
            } else if (!types_equal(s.session, *act->payload.chan)) {
                err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                    "received channel has session " + to_string(*act->payload.chan) +
                        ", declared " + to_string(s.session));
            }
            SessionType carried = act->payload.tag == PayloadTag::Chan
                                      ? *act->payload.chan
                                      : s.session;
            st->remaining.steps.erase(st->remaining.steps.begin());
            if (bindable(ctx, s.name, s.loc))
                ctx.chans[s.name] = ChannelState{std::move(carried), Role::Client, s.loc};
        } else {
            ValueType got = act->payload.tag == PayloadTag::Int    ? ValueType::Int
                            : act->payload.tag == PayloadTag::Bool ? ValueType::Bool
                                                                   : ValueType::Void;
            if (act->payload.tag == PayloadTag::Chan)
                err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                    "session carries a channel here; bind it with a session type");
            else if (got != s.value_type)
                err(TypeErrorKind::PayloadMismatch, s.loc, s.chan,
                    std::string("session carries ") + to_string(got) + ", declared " +
                        to_string(s.value_type));
            st->remaining.steps.erase(st->remaining.steps.begin());
            if (bindable(ctx, s.name, s.loc)) ctx.vals[s.name] = s.value_type;
        }
        set_dir(s.id, d);
        return ctx;
    }

    std::optional<Ctx> check_send_label(const Stmt& s, Ctx ctx) {
        ChannelState* st = lookup_chan(ctx, s.chan, s.loc);
        if (!st) return ctx;
        if (!st->remaining.steps.empty()) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                "label send but the session is at a value transmission");
            poison(ctx, s.chan);
            return ctx;
        }
        if (st->remaining.term.kind == TermKind::End) {
            err(TypeErrorKind::ActionAfterEnd, s.loc, s.chan,
                "label send after the session has ended");
            poison(ctx, s.chan);
            return ctx;
        }
        Direction pol = st->remaining.term.polarity;
        if (!sender_side(st->role, pol)) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                "this side receives the choice label (use switch)");
            poison(ctx, s.chan);
            return ctx;
        }
        const ChoiceDecl* decl = env_.find(st->remaining.term.choice);
        if (!decl) return ctx;    // UnknownChoice already reported at declaration
        const SessionType* branch = decl->branch(s.label);
        if (!branch) {
            err(TypeErrorKind::UnknownLabel, s.loc, decl->name + "." + s.label);
            poison(ctx, s.chan);
            return ctx;
        }
        set_dir(s.id, pol);
        st->remaining = *branch;
        return ctx;
    }

    std::optional<Ctx> check_switch(const Stmt& s, Ctx ctx) {
        ChannelState* st = lookup_chan(ctx, s.chan, s.loc);
        if (!st) return ctx;
        if (!st->remaining.steps.empty()) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                "switch but the session is at a value transmission");
            poison(ctx, s.chan);
            return ctx;
        }
        if (st->remaining.term.kind == TermKind::End) {
            err(TypeErrorKind::ActionAfterEnd, s.loc, s.chan,
                "switch after the session has ended");
            poison(ctx, s.chan);
            return ctx;
        }
        Direction pol = st->remaining.term.polarity;
        if (sender_side(st->role, pol)) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                "this side selects the label (send one with '.')");
            poison(ctx, s.chan);
            return ctx;
        }
        const ChoiceDecl* decl = env_.find(st->remaining.term.choice);
        if (!decl) return ctx;
        set_dir(s.id, pol);

        std::set<std::string> seen;
        for (const auto& c : s.cases) {
            if (!decl->branch(c.label) || !seen.insert(c.label).second)
                err(TypeErrorKind::ExtraCase, c.loc, c.label,
                    "label is not part of choice " + decl->name +
                        " (or appears twice)");
        }
        for (const auto& b : decl->branches)
            if (!seen.count(b.label))
                err(TypeErrorKind::MissingCase, s.loc, b.label,
                    "switch does not handle this label of choice " + decl->name);

        std::optional<Ctx> joined;
        bool join_ok = true;
        for (const auto& c : s.cases) {
            const SessionType* branch = decl->branch(c.label);
            if (!branch) continue;
            Ctx branch_ctx = ctx;
            branch_ctx.chans.at(s.chan).remaining = *branch;
            auto res = check_block(c.body, std::move(branch_ctx));
            if (!res) continue;
            if (!joined) {
                joined = std::move(res);
            } else {
                std::string detail;
                if (!chan_maps_equal(joined->chans, res->chans, &detail)) {
                    if (join_ok)
                        err(TypeErrorKind::JoinMismatch, s.loc, s.chan, detail);
                    join_ok = false;
                }
            }
        }
        if (!joined) return std::nullopt;
        return joined;
    }

    std::optional<Ctx> check_close(const Stmt& s, Ctx ctx) {
        ChannelState* st = lookup_chan(ctx, s.chan, s.loc);
        if (!st) return ctx;
        if (st->role != Role::Provider) {
            err(TypeErrorKind::ChannelMisuse, s.loc, s.chan,
                "close is the provider's half; a client calls wait");
            poison(ctx, s.chan);
            return ctx;
        }
        if (!st->remaining.steps.empty() || st->remaining.term.kind != TermKind::End) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                "close before the session has ended (at " + to_string(st->remaining) + ")");
            poison(ctx, s.chan);
            return ctx;
        }
        for (const auto& [name, other] : ctx.chans) {
            (void)other;
            if (name != s.chan) {
                err(TypeErrorKind::NotLeaf, s.loc, s.chan,
                    "close while still holding " + name);
                break;
            }
        }
        set_dir(s.id, Direction::ToClient);
        consume(ctx, s.chan, s.loc);
        return ctx;
    }

    std::optional<Ctx> check_wait(const Stmt& s, Ctx ctx) {
        ChannelState* st = lookup_chan(ctx, s.chan, s.loc);
        if (!st) return ctx;
        if (st->role != Role::Client) {
            err(TypeErrorKind::ChannelMisuse, s.loc, s.chan,
                "wait is the client's half; a provider calls close");
            poison(ctx, s.chan);
            return ctx;
        }
        if (!st->remaining.steps.empty() || st->remaining.term.kind != TermKind::End) {
            err(TypeErrorKind::WrongOrder, s.loc, s.chan,
                "wait before the session has ended (at " + to_string(st->remaining) + ")");
            poison(ctx, s.chan);
            return ctx;
        }
        set_dir(s.id, Direction::ToClient);
        consume(ctx, s.chan, s.loc);
        return ctx;
    }

    std::optional<Ctx> check_forward(const Stmt& s, Ctx ctx) {
        ChannelState* provided = lookup_chan(ctx, s.chan, s.loc);
        ChannelState* used = lookup_chan(ctx, s.chan2, s.loc);
        if (!provided || !used) return std::nullopt;
        bool ok = true;
        if (provided->role != Role::Provider) {
            err(TypeErrorKind::ForwardRoleError, s.loc, s.chan,
                "left side of a forward must be the provided channel");
            ok = false;
        }
        if (used->role != Role::Client) {
            err(TypeErrorKind::ForwardRoleError, s.loc, s.chan2,
                "right side of a forward must be a used (client) channel");
            ok = false;
        }
        if (ok && !types_equal(provided->remaining, used->remaining)) {
            err(TypeErrorKind::ForwardTypeMismatch, s.loc, s.chan,
                "cannot splice " + to_string(provided->remaining) + " onto " +
                    to_string(used->remaining));
            ok = false;
        }
        if (ok && provided->remaining.steps.empty() &&
            provided->remaining.term.kind == TermKind::End) {
            err(TypeErrorKind::ForwardAtEnd, s.loc, s.chan,
                "session already ended; use close/wait");
            ok = false;
        }
        for (const auto& [name, other] : ctx.chans) {
            (void)other;
            if (name != s.chan && name != s.chan2) {
                err(TypeErrorKind::NotLeaf, s.loc, s.chan,
                    "forward while still holding " + name);
                break;
            }
        }
        if (ok) {
            Direction d = provided->remaining.steps.empty()
                              ? provided->remaining.term.polarity
                              : provided->remaining.steps.front().dir;
            set_dir(s.id, d);
        }
        consume(ctx, s.chan, s.loc);
        consume(ctx, s.chan2, s.loc);
        return std::nullopt;    // the forwarding process terminates
    }

    std::optional<Ctx> check_if(const Stmt& s, Ctx ctx) {
        auto ct = check_value_expr(*s.init, ctx);
        if (ct && *ct != ValueType::Bool)
            err(TypeErrorKind::TypeMismatch, s.init->loc, "if", "condition must be bool");
        auto then_res = check_block(s.then_block, ctx);
        std::optional<Ctx> else_res;
        if (s.else_block.empty()) {
            else_res = ctx;
        } else {
            else_res = check_block(s.else_block, std::move(ctx));
        }
        if (!then_res && !else_res) return std::nullopt;
        if (!then_res) return else_res;
        if (!else_res) return then_res;
        std::string detail;
        if (!chan_maps_equal(then_res->chans, else_res->chans, &detail))
            err(TypeErrorKind::JoinMismatch, s.loc, "if", detail);
        return then_res;
    }

    std::optional<Ctx> check_while(const Stmt& s, Ctx ctx) {
        auto ct = check_value_expr(*s.init, ctx);
        if (ct && *ct != ValueType::Bool)
            err(TypeErrorKind::TypeMismatch, s.init->loc, "while", "condition must be bool");
        bool endless = s.init->kind == Expr::Kind::BoolLit && s.init->bool_val;
        auto body_res = check_block(s.then_block, ctx);
        if (body_res) {
            std::string detail;
            if (!chan_maps_equal(body_res->chans, ctx.chans, &detail))
                err(TypeErrorKind::JoinMismatch, s.loc, "while",
                    "loop body must leave channels as it found them: " + detail);
        }
        if (endless) return std::nullopt;
        return ctx;
    }

    std::optional<Ctx> check_return(const Stmt& s, Ctx ctx) {
        assert(cur_fn_);
        if (cur_fn_->is_spawning || cur_fn_->return_type == ValueType::Void) {
            if (s.init)
                err(TypeErrorKind::TypeMismatch, s.loc, cur_fn_->name,
                    "this function does not return a value");
        } else {
            if (!s.init) {
                err(TypeErrorKind::TypeMismatch, s.loc, cur_fn_->name,
                    std::string("return needs ") + to_string(cur_fn_->return_type));
            } else {
                auto vt = check_value_expr(*s.init, ctx);
                if (vt && *vt != cur_fn_->return_type)
                    err(TypeErrorKind::TypeMismatch, s.loc, cur_fn_->name,
                        std::string("return type is ") + to_string(cur_fn_->return_type));
            }
        }
        for (const auto& [name, st] : ctx.chans)
            err(TypeErrorKind::Unconsumed, s.loc, name,
                "channel is still live at return (bound at line " +
                    std::to_string(st.bind_loc.line) + ")");
        return std::nullopt;
    }

    std::optional<Ctx> check_tail_call(const Stmt& s, Ctx ctx) {
        ChannelState* st = lookup_chan(ctx, s.chan, s.loc);
        if (!st) return std::nullopt;
        if (st->role != Role::Provider) {
            err(TypeErrorKind::ChannelMisuse, s.loc, s.chan,
                "only the provided channel can be re-provided by a call");
            return std::nullopt;
        }
        const FunctionDecl* callee = prog_.find_function(s.callee);
        if (!callee) {
            err(TypeErrorKind::UnknownFunction, s.loc, s.callee);
            return std::nullopt;
        }
        if (!callee->is_spawning) {
            err(TypeErrorKind::TypeMismatch, s.loc, s.callee,
                "only spawning functions can re-provide a channel");
            return std::nullopt;
        }
        if (!types_equal(st->remaining, callee->provided_session)) {
            err(TypeErrorKind::TypeMismatch, s.loc, s.chan,
                "session is at " + to_string(st->remaining) + " but " + s.callee +
                    " provides " + to_string(callee->provided_session));
        }
        consume(ctx, s.chan, s.loc);
        check_call_args(*callee, s.args, s.loc, ctx);
        for (const auto& [name, other] : ctx.chans) {
            (void)other;
            err(TypeErrorKind::Unconsumed, s.loc, name,
                "tail call leaves this channel behind");
        }
        ann_.tail_calls.insert(s.id);
        ann_.callee_index[s.id] = prog_.function_index(s.callee);
        return std::nullopt;
    }

    // ---- functions ----------------------------------------------------------

    void check_function(const FunctionDecl& f) {
        cur_fn_ = &f;
        consumed_.clear();
        poisoned_.clear();
        Ctx ctx;
        for (const auto& p : f.params) {
            if (p.is_chan) {
                if (ctx.chans.count(p.name)) continue;    // dup already reported
                ctx.chans[p.name] = ChannelState{p.session, Role::Client, p.loc};
            } else {
                ctx.vals[p.name] = p.vtype;
            }
        }
        if (f.is_spawning) {
            if (ctx.chans.count(f.provided_chan) || ctx.vals.count(f.provided_chan))
                err(TypeErrorKind::DuplicateDefinition, f.loc, f.provided_chan,
                    "provided channel shadows a parameter");
            ctx.chans[f.provided_chan] =
                ChannelState{f.provided_session, Role::Provider, f.loc};
        }
        auto res = check_block(f.body, std::move(ctx));
        if (res) {
            if (!f.is_spawning && f.return_type != ValueType::Void)
                err(TypeErrorKind::TypeMismatch, f.loc, f.name,
                    "function can fall off the end without returning");
            for (const auto& [name, st] : res->chans)
                err(TypeErrorKind::Unconsumed, st.bind_loc, name,
                    "channel is never consumed in " + f.name);
        }
        cur_fn_ = nullptr;
    }

    const Program& prog_;
    ChoiceEnv env_;
    std::vector<TypeError> errors_;
    Annotations ann_;
    const FunctionDecl* cur_fn_ = nullptr;
    std::map<std::string, SourceLoc> consumed_;
    std::set<std::string> poisoned_;
    std::set<std::string> used_this_stmt_;
};

}  // namespace

CheckResult check_program(const Program& p) { return Checker(p).run(); }

}  // namespace sessc
