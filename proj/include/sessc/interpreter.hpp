#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sessc/ast.hpp"
#include "sessc/runtime.hpp"
#include "sessc/typechecker.hpp"

namespace sessc {

enum class Op : uint8_t {
    PushI, PushB,
    Load, Store, Pop,
    Add, Sub, Mul, Div, Mod,
    CmpLt, CmpLe, CmpEq, CmpNe,
    Jmp, Jf,
    CallSeq, Print,
    Spawn,
    Send, SendLabel,
    Recv, RecvSwitch,
    Close, Wait,
    Forward, TailCall,
    RetVal, RetVoid,
};

struct Instr {
    Op op = Op::RetVoid;
    uint8_t kind = 0;    // PayloadTag for Send/Recv
    uint8_t dir = 0;     // Direction for channel ops
    int32_t a = 0;
    int32_t b = 0;
    int64_t imm = 0;     // literals; Spawn: bounded width or -1
};

struct CompiledFunction {
    std::string name;
    bool is_spawning = false;
    ValueType return_type = ValueType::Void;
    int n_params = 0;
    int provided_slot = -1;    // spawning functions: slot holding the provided endpoint
    int n_slots = 0;
    std::vector<Instr> code;
};

struct CompiledProgram {
    std::vector<CompiledFunction> functions;
    int main_index = -1;
    std::vector<std::string> label_names;                         // label id -> text
    std::vector<std::vector<std::pair<int, int>>> switch_tables;  // label id -> pc
};

// Lowers a checked program; requires check_program to have succeeded.
CompiledProgram compile_program(const Program& p, const Annotations& ann);

struct RunOptions {
    std::string backend = "opt";
    uint64_t seed = 1;
    int threads = 1;
    bool assert_invariants = false;
    int64_t timeout_ms = 0;    // 0 = none
};

struct RunStats {
    int64_t processes_spawned = 0;
    int64_t tail_calls = 0;
    int64_t max_frame_depth = 1;
    int64_t channel_ops = 0;
    int64_t messages_sent = 0;
    int64_t forwards_sent = 0;
    int64_t forwards_adopted = 0;
    int64_t direction_flips = 0;
    int64_t violations = 0;
    int64_t live_processes_at_exit = 0;
    int64_t live_channels_at_exit = 0;
};

struct RunResult {
    bool ok = false;
    bool panicked = false;
    bool timed_out = false;
    int64_t exit_value = 0;
    std::string output;
    std::string panic_message;
    RunStats stats;
};

// Runs main to completion on a pool of `threads` workers. With threads == 1
// and a fixed seed, scheduling is reproducible.
RunResult run_program(const CompiledProgram& prog, const RunOptions& opts);

}  // namespace sessc
