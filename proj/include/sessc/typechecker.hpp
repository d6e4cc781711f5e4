#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sessc/ast.hpp"
#include "sessc/diagnostics.hpp"
#include "sessc/session_types.hpp"

namespace sessc {

enum class TypeErrorKind : uint8_t {
    // Session fidelity
    WrongOrder,
    PayloadMismatch,
    MissingCase,
    ExtraCase,
    ActionAfterEnd,
    UnknownChoice,
    UnknownLabel,
    // Linearity
    Unconsumed,
    UseAfterConsume,
    DuplicateUse,
    JoinMismatch,
    NotLeaf,
    // Forwarding / tail calls
    ForwardTypeMismatch,
    ForwardRoleError,
    ForwardAtEnd,
    TailPositionError,
    // General
    UnknownFunction,
    UnknownVariable,
    ArityMismatch,
    TypeMismatch,
    ChannelMisuse,
    MainShape,
    DuplicateDefinition,
    Unreachable,
};

const char* to_string(TypeErrorKind k);

struct TypeError {
    TypeErrorKind kind;
    SourceLoc loc;
    std::string message;    // rendered as "Kind(subject): detail" where applicable
};

Diagnostic to_diagnostic(const TypeError& e);

// Tracking state for one channel name during checking. `remaining` is always
// written from the provider's point of view; a client interprets it through
// its dual.
struct ChannelState {
    SessionType remaining;
    Role role = Role::Client;
    SourceLoc bind_loc;
};

// Per-node facts the runtime needs, keyed by AST node id.
struct Annotations {
    struct SpawnInfo {
        Width width;
        Direction init_dir = Direction::ToClient;
        int callee = -1;    // function index
    };

    std::vector<uint8_t> has_dir;      // node id -> bool
    std::vector<Direction> dir;        // node id -> message flow direction
    std::unordered_map<int, SpawnInfo> spawns;     // Spawn expr id
    std::unordered_set<int> tail_calls;            // TailCall stmt ids (all marked)
    std::unordered_map<int, int> callee_index;     // Call expr / TailCall stmt id -> fn idx
    std::unordered_map<int, PayloadTag> send_kinds;    // Send stmt id -> payload kind

    Direction direction_of(int node_id) const { return dir.at(static_cast<size_t>(node_id)); }
    bool has_direction(int node_id) const {
        return node_id >= 0 && static_cast<size_t>(node_id) < has_dir.size() &&
               has_dir[static_cast<size_t>(node_id)];
    }
};

struct CheckResult {
    bool ok = false;
    std::vector<TypeError> errors;
    Annotations annotations;

    std::vector<Diagnostic> diagnostics() const;
};

// Whole-program check: session fidelity, linearity, forward and tail-call
// legality. On success every communication op carries its direction and every
// spawn site its buffer width and initial direction.
CheckResult check_program(const Program& p);

}  // namespace sessc
