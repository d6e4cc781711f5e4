#include "sessc/interpreter.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

namespace sessc {

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

namespace {

class FnCompiler {
public:
    FnCompiler(const Program& prog, const Annotations& ann, CompiledProgram& out,
               std::map<std::string, int>& label_ids)
        : prog_(prog), ann_(ann), out_(out), label_ids_(label_ids) {}

    CompiledFunction compile(const FunctionDecl& f) {
        fn_ = CompiledFunction{};
        fn_.name = f.name;
        fn_.is_spawning = f.is_spawning;
        fn_.return_type = f.return_type;
        fn_.n_params = static_cast<int>(f.params.size());
        next_slot_ = 0;
        scopes_.clear();
        scopes_.emplace_back();
        for (const auto& p : f.params) bind(p.name);
        if (f.is_spawning) fn_.provided_slot = bind(f.provided_chan);
        compile_block(f.body);
        emit(Op::RetVoid);
        fn_.n_slots = next_slot_;
        return std::move(fn_);
    }

private:
    int emit(Op op, int32_t a = 0, int32_t b = 0, int64_t imm = 0, uint8_t kind = 0,
             uint8_t dir = 0) {
        fn_.code.push_back({op, kind, dir, a, b, imm});
        return static_cast<int>(fn_.code.size()) - 1;
    }
    int here() const { return static_cast<int>(fn_.code.size()); }
    void patch(int at, int target) { fn_.code[static_cast<size_t>(at)].a = target; }

    int bind(const std::string& name) {
        int slot = next_slot_++;
        scopes_.back()[name] = slot;
        return slot;
    }
    int slot_of(const std::string& name) const {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto f = it->find(name);
            if (f != it->end()) return f->second;
        }
        assert(false && "unbound name after checking");
        return 0;
    }

    int label_id(const std::string& label) {
        auto it = label_ids_.find(label);
        if (it != label_ids_.end()) return it->second;
        int id = static_cast<int>(out_.label_names.size());
        out_.label_names.push_back(label);
        label_ids_[label] = id;
        return id;
    }

    uint8_t dir_of(int node_id) const {
        return static_cast<uint8_t>(ann_.dir[static_cast<size_t>(node_id)]);
    }

    void compile_expr(const Expr& e) {
        switch (e.kind) {
            case Expr::Kind::IntLit: emit(Op::PushI, 0, 0, e.int_val); break;
            case Expr::Kind::BoolLit: emit(Op::PushB, 0, 0, e.bool_val ? 1 : 0); break;
            case Expr::Kind::Var:
            case Expr::Kind::ChanVar: emit(Op::Load, slot_of(e.name)); break;
            case Expr::Kind::Binary: compile_binary(e); break;
            case Expr::Kind::Call: {
                if (e.name == "print") {
                    compile_expr(*e.args[0]);
                    emit(Op::Print);
                    break;
                }
                for (const auto& a : e.args) compile_expr(*a);
                emit(Op::CallSeq, ann_.callee_index.at(e.id),
                     static_cast<int32_t>(e.args.size()));
                break;
            }
            case Expr::Kind::Spawn: assert(false && "spawn outside channel declaration");
        }
    }

    void compile_binary(const Expr& e) {
        if (e.op == BinOp::And) {
            compile_expr(*e.lhs);
            int jf = emit(Op::Jf);
            compile_expr(*e.rhs);
            int jend = emit(Op::Jmp);
            patch(jf, here());
            emit(Op::PushB, 0, 0, 0);
            patch(jend, here());
            return;
        }
        if (e.op == BinOp::Or) {
            compile_expr(*e.lhs);
            int jf = emit(Op::Jf);
            emit(Op::PushB, 0, 0, 1);
            int jend = emit(Op::Jmp);
            patch(jf, here());
            compile_expr(*e.rhs);
            patch(jend, here());
            return;
        }
        compile_expr(*e.lhs);
        compile_expr(*e.rhs);
        switch (e.op) {
            case BinOp::Add: emit(Op::Add); break;
            case BinOp::Sub: emit(Op::Sub); break;
            case BinOp::Mul: emit(Op::Mul); break;
            case BinOp::Div: emit(Op::Div); break;
            case BinOp::Mod: emit(Op::Mod); break;
            case BinOp::Lt: emit(Op::CmpLt); break;
            case BinOp::Le: emit(Op::CmpLe); break;
            case BinOp::Eq: emit(Op::CmpEq); break;
            case BinOp::Ne: emit(Op::CmpNe); break;
            default: assert(false);
        }
    }

    void compile_block(const Block& b) {
        scopes_.emplace_back();
        for (const auto& s : b) compile_stmt(*s);
        scopes_.pop_back();
    }

    void compile_stmt(const Stmt& s) {
        switch (s.kind) {
            case Stmt::Kind::VarDecl: {
                compile_expr(*s.init);
                emit(Op::Store, bind(s.name));
                break;
            }
            case Stmt::Kind::ChanDecl: {
                const Expr& sp = *s.init;
                for (const auto& a : sp.args) compile_expr(*a);
                const auto& info = ann_.spawns.at(sp.id);
                emit(Op::Spawn, info.callee, static_cast<int32_t>(sp.args.size()),
                     info.width.is_bounded ? info.width.slots : -1, 0,
                     static_cast<uint8_t>(info.init_dir));
                emit(Op::Store, bind(s.name));
                break;
            }
            case Stmt::Kind::Assign: {
                compile_expr(*s.init);
                emit(Op::Store, slot_of(s.name));
                break;
            }
            case Stmt::Kind::Send: {
                compile_expr(*s.init);
                emit(Op::Send, slot_of(s.chan), 0, 0,
                     static_cast<uint8_t>(ann_.send_kinds.at(s.id)), dir_of(s.id));
                break;
            }
            case Stmt::Kind::SendLabel: {
                emit(Op::SendLabel, slot_of(s.chan), label_id(s.label), 0, 0, dir_of(s.id));
                break;
            }
            case Stmt::Kind::Recv: {
                PayloadTag kind = s.is_chan_recv ? PayloadTag::Chan
                                  : s.value_type == ValueType::Int ? PayloadTag::Int
                                                                   : PayloadTag::Bool;
                int dst = bind(s.name);
                emit(Op::Recv, dst, slot_of(s.chan), 0, static_cast<uint8_t>(kind),
                     dir_of(s.id));
                break;
            }
            case Stmt::Kind::SwitchChan: {
                int table_idx = static_cast<int>(out_.switch_tables.size());
                out_.switch_tables.emplace_back();
                emit(Op::RecvSwitch, slot_of(s.chan), table_idx, 0, 0, dir_of(s.id));
                std::vector<int> end_jumps;
                std::vector<std::pair<int, int>> table;
                for (const auto& c : s.cases) {
                    table.emplace_back(label_id(c.label), here());
                    compile_block(c.body);
                    end_jumps.push_back(emit(Op::Jmp));
                }
                for (int j : end_jumps) patch(j, here());
                out_.switch_tables[static_cast<size_t>(table_idx)] = std::move(table);
                break;
            }
            case Stmt::Kind::Close:
                emit(Op::Close, slot_of(s.chan));
                break;
            case Stmt::Kind::Wait:
                emit(Op::Wait, slot_of(s.chan));
                break;
            case Stmt::Kind::Forward:
                emit(Op::Forward, slot_of(s.chan), slot_of(s.chan2), 0, 0, dir_of(s.id));
                emit(Op::RetVoid);    // the forwarding process is done
                break;
            case Stmt::Kind::If: {
                compile_expr(*s.init);
                int jf = emit(Op::Jf);
                compile_block(s.then_block);
                if (s.else_block.empty()) {
                    patch(jf, here());
                } else {
                    int jend = emit(Op::Jmp);
                    patch(jf, here());
                    compile_block(s.else_block);
                    patch(jend, here());
                }
                break;
            }
            case Stmt::Kind::While: {
                int head = here();
                compile_expr(*s.init);
                int jf = emit(Op::Jf);
                compile_block(s.then_block);
                emit(Op::Jmp, head);
                patch(jf, here());
                break;
            }
            case Stmt::Kind::Return:
                if (s.init) {
                    compile_expr(*s.init);
                    emit(Op::RetVal);
                } else {
                    emit(Op::RetVoid);
                }
                break;
            case Stmt::Kind::TailCall: {
                for (const auto& a : s.args) compile_expr(*a);
                emit(Op::TailCall, ann_.callee_index.at(s.id),
                     static_cast<int32_t>(s.args.size()));
                break;
            }
            case Stmt::Kind::ExprStmt: {
                compile_expr(*s.init);
                bool pushes = false;
                if (s.init->kind == Expr::Kind::Call && s.init->name != "print") {
                    const FunctionDecl* callee = prog_.find_function(s.init->name);
                    pushes = callee && callee->return_type != ValueType::Void;
                } else if (s.init->kind != Expr::Kind::Call) {
                    pushes = true;
                }
                if (pushes) emit(Op::Pop);
                break;
            }
        }
    }

    const Program& prog_;
    const Annotations& ann_;
    CompiledProgram& out_;
    std::map<std::string, int>& label_ids_;
    CompiledFunction fn_;
    int next_slot_ = 0;
    std::vector<std::map<std::string, int>> scopes_;
};

}  // namespace

CompiledProgram compile_program(const Program& p, const Annotations& ann) {
    CompiledProgram out;
    std::map<std::string, int> label_ids;
    FnCompiler fc(p, ann, out, label_ids);
    for (const auto& f : p.functions) out.functions.push_back(fc.compile(f));
    out.main_index = p.function_index("main");
    return out;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

using rt::PanicKind;
using rt::RuntimePanic;

struct Value {
    enum : uint8_t { I, B, C } kind = I;
    int64_t i = 0;
    rt::Endpoint ep;
};

enum ParkState : int { PS_RUNNING = 0, PS_PARKING = 1, PS_PARKED = 2, PS_WOKEN = 3 };

class Run;

struct Process;

struct TaskWaker final : rt::Waker {
    Process* proc = nullptr;
    void wake() override;
};

struct Process {
    uint64_t pid = 0;
    int fn_idx = -1;
    int pc = 0;
    std::vector<Value> slots;
    std::vector<Value> stack;
    std::atomic<int> park_state{PS_RUNNING};
    TaskWaker waker;
    Run* run = nullptr;

    int64_t tail_calls = 0;
    int64_t frame_depth = 1;
    int64_t max_frame_depth = 1;
};

int64_t wrap_add(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
int64_t wrap_sub(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
int64_t wrap_mul(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

class Run {
public:
    Run(const CompiledProgram& prog, const RunOptions& opts)
        : prog_(prog), opts_(opts), backend_(rt::make_backend(opts.backend)) {
        if (!backend_) throw std::invalid_argument("unknown backend: " + opts.backend);
        mon_.assert_invariants = opts.assert_invariants;
        mon_.enable_tree();
        nworkers_ = std::max(1, opts.threads);
        if (opts.timeout_ms > 0)
            deadline_ = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(opts.timeout_ms);
    }

    RunResult execute() {
        Process* main_proc = new_process(prog_.main_index);
        mon_.on_process_start(main_proc->pid);
        unfinished_.fetch_add(1);
        enqueue(main_proc);

        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(nworkers_));
        for (int i = 0; i < nworkers_; ++i)
            workers.emplace_back([this, i] { worker_loop(i); });
        for (auto& t : workers) t.join();

        RunResult res;
        res.exit_value = exit_value_;
        res.output = std::move(output_);
        res.stats.processes_spawned = stat_spawned_.load();
        res.stats.tail_calls = stat_tail_calls_.load();
        res.stats.max_frame_depth = stat_max_frames_.load();
        res.stats.channel_ops = mon_.channel_ops.load();
        res.stats.messages_sent = mon_.messages_sent.load();
        res.stats.forwards_sent = mon_.forwards_sent.load();
        res.stats.forwards_adopted = mon_.forwards_adopted.load();
        res.stats.direction_flips = mon_.direction_flips.load();
        res.stats.live_processes_at_exit = mon_.live_processes.load();
        res.stats.live_channels_at_exit = mon_.live_channels.load();
        if (!failed_) {
            try {
                mon_.final_check();
            } catch (const RuntimePanic& p) {
                failed_ = true;
                fail_msg_ = p.what();
            }
        }
        res.stats.violations = mon_.violations.load();
        res.panicked = failed_ && !timed_out_;
        res.timed_out = timed_out_;
        res.panic_message = fail_msg_;
        res.ok = !failed_;
        return res;
    }

    void enqueue(Process* p) {
        {
            std::lock_guard<std::mutex> lk(qm_);
            runq_.push_back(p);
        }
        qcv_.notify_one();
    }

private:
    friend struct TaskWaker;

    Process* new_process(int fn_idx) {
        auto p = std::make_unique<Process>();
        p->pid = next_pid_.fetch_add(1);
        p->fn_idx = fn_idx;
        p->slots.resize(static_cast<size_t>(prog_.functions[static_cast<size_t>(fn_idx)].n_slots));
        p->run = this;
        p->waker.proc = p.get();
        mon_.live_processes.fetch_add(1, std::memory_order_relaxed);
        Process* raw = p.get();
        {
            std::lock_guard<std::mutex> lk(procs_mu_);
            procs_[raw->pid] = std::move(p);
        }
        return raw;
    }

    void release_process(Process* p) {
        std::lock_guard<std::mutex> lk(procs_mu_);
        procs_.erase(p->pid);
    }

    void fail(PanicKind kind, const std::string& msg, bool timeout = false) {
        {
            std::lock_guard<std::mutex> lk(fail_mu_);
            if (!failed_) {
                failed_ = true;
                timed_out_ = timeout;
                fail_msg_ = std::string(rt::to_string(kind)) + ": " + msg;
            }
        }
        {
            std::lock_guard<std::mutex> lk(qm_);
            stop_ = true;
        }
        qcv_.notify_all();
    }

    Process* dequeue() {
        std::unique_lock<std::mutex> lk(qm_);
        for (;;) {
            if (stop_ || done_) return nullptr;
            if (!runq_.empty()) {
                Process* p = runq_.front();
                runq_.pop_front();
                return p;
            }
            if (unfinished_.load() == 0) {
                done_ = true;
                qcv_.notify_all();
                return nullptr;
            }
            ++idle_;
            if (idle_ == nworkers_) {
                --idle_;
                lk.unlock();
                fail(PanicKind::Deadlock,
                     std::to_string(unfinished_.load()) +
                         " processes are all blocked on receives that can never "
                         "be satisfied");
                return nullptr;
            }
            if (deadline_) {
                qcv_.wait_until(lk, *deadline_);
                if (std::chrono::steady_clock::now() >= *deadline_) {
                    --idle_;
                    lk.unlock();
                    fail(PanicKind::Timeout, "run exceeded its time budget", true);
                    return nullptr;
                }
            } else {
                qcv_.wait(lk);
            }
            --idle_;
        }
    }

    void worker_loop(int widx) {
        std::mt19937_64 rng(opts_.seed * 0x9e3779b97f4a7c15ULL + 0x100 + widx);
        std::uniform_int_distribution<int> quantum(1, 128);
        for (;;) {
            if (deadline_ && std::chrono::steady_clock::now() >= *deadline_) {
                fail(PanicKind::Timeout, "run exceeded its time budget", true);
                return;
            }
            Process* p = dequeue();
            if (!p) return;
            p->park_state.store(PS_RUNNING, std::memory_order_relaxed);
            StepResult r;
            try {
                r = step(*p, quantum(rng));
            } catch (const RuntimePanic& panic) {
                fail(panic.kind, panic.what() + std::string(" (in ") +
                                     prog_.functions[static_cast<size_t>(p->fn_idx)].name +
                                     ")");
                return;
            } catch (const std::exception& e) {
                fail(PanicKind::FidelityViolation, e.what());
                return;
            }
            switch (r) {
                case StepResult::Yield: enqueue(p); break;
                case StepResult::Parked: break;
                case StepResult::Exited: {
                    finalize_process(p);
                    break;
                }
            }
        }
    }

    void finalize_process(Process* p) {
        stat_tail_calls_.fetch_add(p->tail_calls, std::memory_order_relaxed);
        int64_t prev = stat_max_frames_.load(std::memory_order_relaxed);
        while (prev < p->max_frame_depth &&
               !stat_max_frames_.compare_exchange_weak(prev, p->max_frame_depth)) {
        }
        mon_.live_processes.fetch_sub(1, std::memory_order_relaxed);
        mon_.on_process_exit(p->pid);
        release_process(p);
        if (unfinished_.fetch_sub(1) == 1) {
            std::lock_guard<std::mutex> lk(qm_);
            done_ = true;
            qcv_.notify_all();
        }
    }

    enum class StepResult { Yield, Parked, Exited };

    Value pop(Process& p) {
        Value v = std::move(p.stack.back());
        p.stack.pop_back();
        return v;
    }

    // Runs a sequential (non-spawning, non-channel) function to completion.
    Value exec_sequential(int fn_idx, std::vector<Value> args) {
        const CompiledFunction& fn = prog_.functions[static_cast<size_t>(fn_idx)];
        std::vector<Value> slots(static_cast<size_t>(fn.n_slots));
        for (size_t i = 0; i < args.size(); ++i) slots[i] = std::move(args[i]);
        std::vector<Value> stack;
        int pc = 0;
        for (;;) {
            const Instr& ins = fn.code[static_cast<size_t>(pc)];
            switch (ins.op) {
                case Op::PushI: stack.push_back({Value::I, ins.imm, {}}); break;
                case Op::PushB: stack.push_back({Value::B, ins.imm, {}}); break;
                case Op::Load: stack.push_back(slots[static_cast<size_t>(ins.a)]); break;
                case Op::Store: {
                    slots[static_cast<size_t>(ins.a)] = std::move(stack.back());
                    stack.pop_back();
                    break;
                }
                case Op::Pop: stack.pop_back(); break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul:
                case Op::Div:
                case Op::Mod:
                case Op::CmpLt:
                case Op::CmpLe:
                case Op::CmpEq:
                case Op::CmpNe: {
                    Value rhs = std::move(stack.back());
                    stack.pop_back();
                    binop(ins.op, stack.back(), rhs);
                    break;
                }
                case Op::Jmp: pc = ins.a; continue;
                case Op::Jf: {
                    Value c = std::move(stack.back());
                    stack.pop_back();
                    if (!c.i) {
                        pc = ins.a;
                        continue;
                    }
                    break;
                }
                case Op::CallSeq: {
                    std::vector<Value> call_args(static_cast<size_t>(ins.b));
                    for (int i = ins.b - 1; i >= 0; --i) {
                        call_args[static_cast<size_t>(i)] = std::move(stack.back());
                        stack.pop_back();
                    }
                    Value rv = exec_sequential(ins.a, std::move(call_args));
                    const CompiledFunction& callee =
                        prog_.functions[static_cast<size_t>(ins.a)];
                    if (callee.return_type != ValueType::Void) stack.push_back(std::move(rv));
                    break;
                }
                case Op::RetVal: return pop_back(stack);
                case Op::RetVoid: return Value{};
                default:
                    throw RuntimePanic(PanicKind::FidelityViolation,
                                       "channel operation in a sequential call");
            }
            ++pc;
        }
    }

    static Value pop_back(std::vector<Value>& stack) {
        Value v = std::move(stack.back());
        stack.pop_back();
        return v;
    }

    void binop(Op op, Value& lhs, const Value& rhs) {
        int64_t a = lhs.i;
        int64_t b = rhs.i;
        switch (op) {
            case Op::Add: lhs = {Value::I, wrap_add(a, b), {}}; return;
            case Op::Sub: lhs = {Value::I, wrap_sub(a, b), {}}; return;
            case Op::Mul: lhs = {Value::I, wrap_mul(a, b), {}}; return;
            case Op::Div:
                if (b == 0) throw RuntimePanic(PanicKind::DivideByZero, "division by zero");
                if (a == INT64_MIN && b == -1) {
                    lhs = {Value::I, INT64_MIN, {}};
                    return;
                }
                lhs = {Value::I, a / b, {}};
                return;
            case Op::Mod:
                if (b == 0) throw RuntimePanic(PanicKind::DivideByZero, "modulo by zero");
                if (a == INT64_MIN && b == -1) {
                    lhs = {Value::I, 0, {}};
                    return;
                }
                lhs = {Value::I, a % b, {}};
                return;
            case Op::CmpLt: lhs = {Value::B, a < b ? 1 : 0, {}}; return;
            case Op::CmpLe: lhs = {Value::B, a <= b ? 1 : 0, {}}; return;
            case Op::CmpEq: lhs = {Value::B, a == b ? 1 : 0, {}}; return;
            case Op::CmpNe: lhs = {Value::B, a != b ? 1 : 0, {}}; return;
            default: assert(false);
        }
    }

    // Blocking receive from inside the instruction loop. Returns false when the
    // task parked (the worker must drop it).
    bool recv_or_park(Process& p, rt::Endpoint& ep, const rt::Expect& want, Direction dir,
                      rt::Message* out) {
        for (;;) {
            p.park_state.store(PS_PARKING, std::memory_order_relaxed);
            auto st = rt::recv_poll(ep, want, dir, &p.waker, out, p.pid);
            if (st == rt::PollStatus::Ready) {
                p.park_state.store(PS_RUNNING, std::memory_order_relaxed);
                return true;
            }
            int expected = PS_PARKING;
            if (p.park_state.compare_exchange_strong(expected, PS_PARKED)) return false;
            // A sender beat us to it; retry in place.
            p.park_state.store(PS_RUNNING, std::memory_order_relaxed);
        }
    }

    StepResult step(Process& p, int budget) {
        for (int n = 0; n < budget; ++n) {
            const CompiledFunction* fn = &prog_.functions[static_cast<size_t>(p.fn_idx)];
            const Instr& ins = fn->code[static_cast<size_t>(p.pc)];
            switch (ins.op) {
                case Op::PushI: p.stack.push_back({Value::I, ins.imm, {}}); break;
                case Op::PushB: p.stack.push_back({Value::B, ins.imm, {}}); break;
                case Op::Load: p.stack.push_back(p.slots[static_cast<size_t>(ins.a)]); break;
                case Op::Store: {
                    p.slots[static_cast<size_t>(ins.a)] = std::move(p.stack.back());
                    p.stack.pop_back();
                    break;
                }
                case Op::Pop: p.stack.pop_back(); break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul:
                case Op::Div:
                case Op::Mod:
                case Op::CmpLt:
                case Op::CmpLe:
                case Op::CmpEq:
                case Op::CmpNe: {
                    Value rhs = std::move(p.stack.back());
                    p.stack.pop_back();
                    binop(ins.op, p.stack.back(), rhs);
                    break;
                }
                case Op::Jmp: p.pc = ins.a; continue;
                case Op::Jf: {
                    Value c = std::move(p.stack.back());
                    p.stack.pop_back();
                    if (!c.i) {
                        p.pc = ins.a;
                        continue;
                    }
                    break;
                }
                case Op::CallSeq: {
                    std::vector<Value> args(static_cast<size_t>(ins.b));
                    for (int i = ins.b - 1; i >= 0; --i) {
                        args[static_cast<size_t>(i)] = std::move(p.stack.back());
                        p.stack.pop_back();
                    }
                    Value rv = exec_sequential(ins.a, std::move(args));
                    const CompiledFunction& callee =
                        prog_.functions[static_cast<size_t>(ins.a)];
                    if (callee.return_type != ValueType::Void)
                        p.stack.push_back(std::move(rv));
                    break;
                }
                case Op::Print: {
                    Value v = std::move(p.stack.back());
                    p.stack.pop_back();
                    std::lock_guard<std::mutex> lk(out_mu_);
                    output_ += std::to_string(v.i);
                    output_ += '\n';
                    break;
                }
                case Op::Spawn: {
                    Width w = ins.imm < 0 ? Width::unbounded()
                                          : Width::bounded(static_cast<int>(ins.imm));
                    auto pair = backend_->make_channel(
                        w, static_cast<Direction>(ins.dir), &mon_);
                    Process* child = new_process(ins.a);
                    const CompiledFunction& cf =
                        prog_.functions[static_cast<size_t>(ins.a)];
                    for (int i = ins.b - 1; i >= 0; --i) {
                        child->slots[static_cast<size_t>(i)] = std::move(p.stack.back());
                        p.stack.pop_back();
                    }
                    child->slots[static_cast<size_t>(cf.provided_slot)] =
                        Value{Value::C, 0, std::move(pair.provider)};
                    mon_.on_spawn(p.pid, child->pid, pair.client.chan->id);
                    if (mon_.assert_invariants) {
                        for (int i = 0; i < ins.b; ++i) {
                            Value& v = child->slots[static_cast<size_t>(i)];
                            if (v.kind == Value::C && v.ep) {
                                v.ep.token = rt::transfer_token(v.ep);
                                mon_.on_handoff(v.ep.chan->id, v.ep.role, child->pid);
                            }
                        }
                        mon_.check_tree_now();
                    }
                    stat_spawned_.fetch_add(1, std::memory_order_relaxed);
                    unfinished_.fetch_add(1);
                    p.stack.push_back(Value{Value::C, 0, std::move(pair.client)});
                    enqueue(child);
                    break;
                }
                case Op::Send: {
                    Value payload = std::move(p.stack.back());
                    p.stack.pop_back();
                    rt::Endpoint& ep = p.slots[static_cast<size_t>(ins.a)].ep;
                    rt::Message m;
                    auto kind = static_cast<PayloadTag>(ins.kind);
                    if (kind == PayloadTag::Chan) {
                        payload.ep.token = rt::transfer_token(payload.ep);
                        mon_.on_into_buffer(payload.ep.chan->id, payload.ep.role,
                                            ep.chan->id);
                        m = rt::Message::val_chan(std::move(payload.ep));
                    } else if (kind == PayloadTag::Int) {
                        m = rt::Message::val_int(payload.i);
                    } else {
                        m = rt::Message::val_bool(payload.i != 0);
                    }
                    rt::send_value(ep, std::move(m), static_cast<Direction>(ins.dir),
                                   p.pid);
                    break;
                }
                case Op::SendLabel: {
                    rt::Endpoint& ep = p.slots[static_cast<size_t>(ins.a)].ep;
                    rt::send_value(ep, rt::Message::label_of(ins.b),
                                   static_cast<Direction>(ins.dir), p.pid);
                    break;
                }
                case Op::Recv: {
                    rt::Endpoint& ep = p.slots[static_cast<size_t>(ins.b)].ep;
                    auto kind = static_cast<PayloadTag>(ins.kind);
                    rt::Message msg;
                    if (!recv_or_park(p, ep, rt::Expect::val(kind),
                                      static_cast<Direction>(ins.dir), &msg))
                        return StepResult::Parked;
                    Value& dst = p.slots[static_cast<size_t>(ins.a)];
                    if (kind == PayloadTag::Chan)
                        dst = Value{Value::C, 0, std::move(msg.carried)};
                    else
                        dst = Value{kind == PayloadTag::Int ? Value::I : Value::B, msg.bits,
                                    {}};
                    break;
                }
                case Op::RecvSwitch: {
                    rt::Endpoint& ep = p.slots[static_cast<size_t>(ins.a)].ep;
                    rt::Message msg;
                    if (!recv_or_park(p, ep, rt::Expect::label(),
                                      static_cast<Direction>(ins.dir), &msg))
                        return StepResult::Parked;
                    const auto& table =
                        prog_.switch_tables[static_cast<size_t>(ins.b)];
                    int target = -1;
                    for (const auto& [lbl, pc] : table) {
                        if (lbl == msg.label) {
                            target = pc;
                            break;
                        }
                    }
                    if (target < 0)
                        throw RuntimePanic(
                            PanicKind::FidelityViolation,
                            "received label #" + std::to_string(msg.label) +
                                " has no case in this switch");
                    p.pc = target;
                    continue;
                }
                case Op::Close: {
                    rt::Endpoint& ep = p.slots[static_cast<size_t>(ins.a)].ep;
                    rt::close_end(ep, p.pid);
                    ep = {};
                    break;
                }
                case Op::Wait: {
                    rt::Endpoint& ep = p.slots[static_cast<size_t>(ins.a)].ep;
                    rt::Message msg;
                    if (!recv_or_park(p, ep, rt::Expect::done(), Direction::ToClient, &msg))
                        return StepResult::Parked;
                    ep = {};
                    break;
                }
                case Op::Forward: {
                    rt::Endpoint provided =
                        std::move(p.slots[static_cast<size_t>(ins.a)].ep);
                    rt::Endpoint used = std::move(p.slots[static_cast<size_t>(ins.b)].ep);
                    rt::forward_endpoints(std::move(provided), std::move(used),
                                          static_cast<Direction>(ins.dir), p.pid);
                    break;
                }
                case Op::TailCall: {
                    const CompiledFunction& callee =
                        prog_.functions[static_cast<size_t>(ins.a)];
                    std::vector<Value> new_slots(static_cast<size_t>(callee.n_slots));
                    for (int i = ins.b - 1; i >= 0; --i) {
                        new_slots[static_cast<size_t>(i)] = std::move(p.stack.back());
                        p.stack.pop_back();
                    }
                    new_slots[static_cast<size_t>(callee.provided_slot)] =
                        std::move(p.slots[static_cast<size_t>(fn->provided_slot)]);
                    p.slots = std::move(new_slots);
                    p.fn_idx = ins.a;
                    p.pc = 0;
                    p.tail_calls += 1;
                    // Frame replaced in place: depth stays where it was.
                    p.max_frame_depth = std::max(p.max_frame_depth, p.frame_depth);
                    continue;
                }
                case Op::RetVal: {
                    Value v = std::move(p.stack.back());
                    p.stack.pop_back();
                    if (p.pid == 1) exit_value_ = v.i;
                    return StepResult::Exited;
                }
                case Op::RetVoid: return StepResult::Exited;
            }
            ++p.pc;
        }
        return StepResult::Yield;
    }

    const CompiledProgram& prog_;
    RunOptions opts_;
    std::unique_ptr<rt::Backend> backend_;
    rt::RunMonitor mon_;
    int nworkers_ = 1;

    std::mutex qm_;
    std::condition_variable qcv_;
    std::deque<Process*> runq_;
    int idle_ = 0;
    bool stop_ = false;
    bool done_ = false;
    std::optional<std::chrono::steady_clock::time_point> deadline_;

    std::atomic<int64_t> unfinished_{0};
    std::atomic<uint64_t> next_pid_{1};
    std::mutex procs_mu_;
    std::map<uint64_t, std::unique_ptr<Process>> procs_;

    std::mutex out_mu_;
    std::string output_;
    int64_t exit_value_ = 0;

    std::mutex fail_mu_;
    bool failed_ = false;
    bool timed_out_ = false;
    std::string fail_msg_;

    std::atomic<int64_t> stat_spawned_{0};
    std::atomic<int64_t> stat_tail_calls_{0};
    std::atomic<int64_t> stat_max_frames_{1};
};

void TaskWaker::wake() {
    int old = proc->park_state.exchange(PS_WOKEN);
    if (old == PS_PARKED) proc->run->enqueue(proc);
}

}  // namespace

RunResult run_program(const CompiledProgram& prog, const RunOptions& opts) {
    if (prog.main_index < 0) throw std::invalid_argument("program has no main");
    Run run(prog, opts);
    return run.execute();
}

}  // namespace sessc
