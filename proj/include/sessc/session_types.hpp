#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sessc/diagnostics.hpp"

namespace sessc {

// Flow direction of a message, seen from the provider side of a channel:
// ToClient means the provider sends, ToProvider means the client sends.
enum class Direction : uint8_t { ToClient, ToProvider };

constexpr Direction flip(Direction d) {
    return d == Direction::ToClient ? Direction::ToProvider : Direction::ToClient;
}

// "toClient" / "toProvider".
const char* to_string(Direction d);

// Which side of a channel an endpoint belongs to. The provider is the process
// spawned to serve the channel; the client holds the other end.
enum class Role : uint8_t { Provider, Client };

const char* to_string(Role r);

struct SessionType;

enum class PayloadTag : uint8_t { Int, Bool, Chan };

struct Payload {
    PayloadTag tag = PayloadTag::Int;
    // Set when tag == Chan: the protocol of the transferred endpoint.
    std::shared_ptr<const SessionType> chan;

    static Payload of_int() { return {PayloadTag::Int, nullptr}; }
    static Payload of_bool() { return {PayloadTag::Bool, nullptr}; }
    static Payload of_chan(SessionType s);
};

// One transmission: a value of `payload` kind flowing in `dir`.
struct Action {
    Direction dir = Direction::ToClient;
    Payload payload;
};

enum class TermKind : uint8_t { End, Choice };

struct Terminator {
    TermKind kind = TermKind::End;
    std::string choice;                          // Choice only
    Direction polarity = Direction::ToClient;    // Choice only: ToClient = internal (!choice)

    static Terminator end() { return {}; }
    static Terminator choice_ref(std::string name, Direction pol) {
        return {TermKind::Choice, std::move(name), pol};
    }
};

// A session type: a straight run of transmissions ending either in End or in a
// named choice. Recursion is only possible through named choices.
struct SessionType {
    std::vector<Action> steps;
    Terminator term;
};

struct ChoiceBranch {
    std::string label;
    SessionType body;
    SourceLoc loc;
};

struct ChoiceDecl {
    std::string name;
    std::vector<ChoiceBranch> branches;    // declaration order, labels unique
    SourceLoc loc;

    const SessionType* branch(const std::string& label) const;
};

// Declaration environment for named choices.
class ChoiceEnv {
public:
    void add(ChoiceDecl decl);
    const ChoiceDecl* find(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }

private:
    std::map<std::string, ChoiceDecl> decls_;
    std::vector<std::string> order_;
};

struct UnknownChoiceError : std::runtime_error {
    explicit UnknownChoiceError(const std::string& name)
        : std::runtime_error("UnknownChoice(" + name + ")") {}
};

struct UnknownLabelError : std::runtime_error {
    UnknownLabelError(const std::string& choice, const std::string& label)
        : std::runtime_error("UnknownLabel(" + choice + "." + label + ")") {}
};

// Mirror image of a type: every transmission direction and every choice
// polarity flipped. Payload protocols are left untouched (the transferred
// endpoint keeps its own protocol). Involution: dual(dual(t)) == t.
SessionType dual(const SessionType& t);

// Continuation of choice `name` after selecting `label`, verbatim as declared.
// Throws UnknownChoiceError / UnknownLabelError.
const SessionType& unfold(const ChoiceEnv& env, const std::string& name,
                          const std::string& label);

// Structural equality; choices compare by name and polarity (nominal).
bool types_equal(const SessionType& a, const SessionType& b);

// Direction of the first message that flows on a fresh channel of this type.
// A bare end still carries the termination handshake toward the client.
Direction initial_direction(const ChoiceEnv& env, const SessionType& t);

// Returns names of choices referenced (transitively) that are not declared.
std::vector<std::string> undeclared_choices(const ChoiceEnv& env, const SessionType& t);

// ---------------------------------------------------------------------------
// Type graph and width inference.
//
// A session type unrolls into a finite directed graph with one node per
// transmission: plain payloads, one node per choice occurrence (the label
// transmission, colored by polarity), and one node per end (the termination
// handshake message, which flows to the client). Edges connect consecutive
// transmissions; an edge between equal-colored nodes is an intra edge, an edge
// between opposite colors is a synchronization edge (buffer provably empty).
// ---------------------------------------------------------------------------

struct TypeGraphNode {
    Direction color;
    std::string origin;    // e.g. "!int", "?choice queue", "DONE"
};

struct TypeGraphEdge {
    int from = -1;
    int to = -1;
    bool sync = false;
};

struct TypeGraph {
    std::vector<TypeGraphNode> nodes;
    std::vector<TypeGraphEdge> edges;
    int entry = -1;

    std::vector<TypeGraphEdge> intra_edges() const;
    std::vector<TypeGraphEdge> sync_edges() const;
    // Intra edges join equal colors, sync edges opposite colors.
    bool coloring_consistent() const;
};

// Maximum number of messages a channel of a type can ever buffer.
struct Width {
    bool is_bounded = false;
    int slots = 0;    // valid when bounded; >= 1

    static Width bounded(int n) { return {true, n}; }
    static Width unbounded() { return {false, 0}; }

    bool operator==(const Width& o) const {
        return is_bounded == o.is_bounded && (!is_bounded || slots == o.slots);
    }
};

// "2" or "unbounded".
std::string to_string(const Width& w);

TypeGraph build_type_graph(const ChoiceEnv& env, const SessionType& t);

// Unbounded iff a single-color subgraph has a cycle; otherwise the node count
// of the longest single-color directed path.
Width infer_width(const TypeGraph& g);
Width infer_width(const ChoiceEnv& env, const SessionType& t);

// "<!int; ?choice queue>" etc.
std::string to_string(const SessionType& t);

}  // namespace sessc
