#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sessc/diagnostics.hpp"
#include "sessc/session_types.hpp"

namespace sessc {

enum class ValueType : uint8_t { Int, Bool, Void };

const char* to_string(ValueType t);

enum class BinOp : uint8_t { Add, Sub, Mul, Div, Mod, Lt, Le, Eq, Ne, And, Or };

const char* to_string(BinOp op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind : uint8_t {
        IntLit,
        BoolLit,
        Var,        // value variable
        ChanVar,    // $name; payload/argument position only
        Binary,
        Call,       // call of an ordinary function
        Spawn,      // call of a spawning function; yields a fresh client endpoint
    };

    Kind kind;
    SourceLoc loc;
    int id = -1;

    int64_t int_val = 0;
    bool bool_val = false;
    std::string name;    // Var/ChanVar ("$x" with sigil) or callee
    BinOp op = BinOp::Add;
    ExprPtr lhs, rhs;
    std::vector<ExprPtr> args;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct SwitchCase {
    std::string label;
    SourceLoc loc;
    Block body;
};

struct Stmt {
    enum class Kind : uint8_t {
        VarDecl,      // value_type name = init;
        ChanDecl,     // session chan = init;           (init is a spawn)
        Assign,       // name = init;
        Send,         // send(chan, init);
        SendLabel,    // chan.label;
        Recv,         // value_type/session name = recv(chan);
        SwitchChan,   // switch (chan) { case ... }
        Close,        // close(chan);
        Wait,         // wait(chan);
        Forward,      // chan = chan2;                  (provided = used)
        If,
        While,
        Return,
        TailCall,     // chan = callee(args);           (re-provide in place)
        ExprStmt,
    };

    Kind kind;
    SourceLoc loc;
    int id = -1;

    ValueType value_type = ValueType::Int;
    SessionType session;
    bool is_chan_recv = false;    // Recv binding a channel endpoint
    std::string name;             // VarDecl/Assign/Recv binder
    std::string label;            // SendLabel
    std::string chan;             // primary channel operand ("$x")
    std::string chan2;            // Forward source
    std::string callee;           // TailCall
    ExprPtr init;                 // initializer / payload / condition / return value
    std::vector<ExprPtr> args;    // TailCall arguments
    Block then_block;             // If-then, While-body
    Block else_block;
    std::vector<SwitchCase> cases;
};

struct Param {
    bool is_chan = false;
    ValueType vtype = ValueType::Int;
    SessionType session;    // is_chan only
    std::string name;       // "$x" for channels
    SourceLoc loc;
};

struct FunctionDecl {
    std::string name;
    SourceLoc loc;
    int id = -1;
    bool is_spawning = false;
    SessionType provided_session;    // is_spawning only
    std::string provided_chan;       // "$c"
    ValueType return_type = ValueType::Void;
    std::vector<Param> params;
    Block body;
};

struct Program {
    std::string filename;
    std::vector<ChoiceDecl> choices;
    std::vector<FunctionDecl> functions;
    int node_count = 0;    // AST ids are in [0, node_count)

    ChoiceEnv choice_env() const;
    const FunctionDecl* find_function(const std::string& name) const;
    int function_index(const std::string& name) const;    // -1 when absent
};

// Canonical source form; reparsing yields a structurally identical program.
std::string pretty_print(const Program& p);

// Structural equality ignoring locations and node ids.
bool programs_equal(const Program& a, const Program& b);

// Deep copy with fresh node ids assigned from *next_id.
Program clone_program(const Program& p);

}  // namespace sessc
