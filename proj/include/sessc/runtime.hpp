#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sessc/session_types.hpp"

namespace sessc::rt {

enum class MsgTag : uint8_t { Val, Label, Done, Fwd };

enum class PanicKind : uint8_t {
    BufferOverflow,
    DirectionViolation,
    FidelityViolation,
    ForwardNotLast,
    EndpointReuse,
    RetiredChannel,
    TreeViolation,
    Deadlock,
    DivideByZero,
    Timeout,
};

const char* to_string(PanicKind k);

struct RuntimePanic : std::runtime_error {
    PanicKind kind;
    RuntimePanic(PanicKind k, const std::string& detail)
        : std::runtime_error(std::string(to_string(k)) + ": " + detail), kind(k) {}
};

struct Channel;

// A transferable token granting exclusive use of one side of a channel.
struct Endpoint {
    std::shared_ptr<Channel> chan;
    Role role = Role::Client;
    uint32_t token = 0;

    explicit operator bool() const { return chan != nullptr; }
};

struct Message {
    MsgTag tag = MsgTag::Done;
    PayloadTag kind = PayloadTag::Int;    // Val only
    int64_t bits = 0;                     // Val(Int|Bool) payload
    int label = -1;                       // Label only
    Endpoint carried;                     // Val(Chan) payload or Fwd target

    static Message val_int(int64_t v) { return {MsgTag::Val, PayloadTag::Int, v, -1, {}}; }
    static Message val_bool(bool v) {
        return {MsgTag::Val, PayloadTag::Bool, v ? 1 : 0, -1, {}};
    }
    static Message val_chan(Endpoint ep) {
        return {MsgTag::Val, PayloadTag::Chan, 0, -1, std::move(ep)};
    }
    static Message label_of(int id) { return {MsgTag::Label, PayloadTag::Int, 0, id, {}}; }
    static Message done() { return {MsgTag::Done, PayloadTag::Int, 0, -1, {}}; }
    static Message fwd(Endpoint ep) {
        return {MsgTag::Fwd, PayloadTag::Int, 0, -1, std::move(ep)};
    }
};

// What a receive expects; anything else (other than a forward) is a fidelity
// panic.
struct Expect {
    MsgTag tag = MsgTag::Val;
    PayloadTag kind = PayloadTag::Int;    // tag == Val only

    static Expect val(PayloadTag k) { return {MsgTag::Val, k}; }
    static Expect label() { return {MsgTag::Label, PayloadTag::Int}; }
    static Expect done() { return {MsgTag::Done, PayloadTag::Int}; }
};

std::string describe(const Message& m);
std::string describe(const Expect& e);

// Receiver-side blocking hook. The scheduler parks tasks through this; the
// plain blocking API sleeps on a condition variable.
struct Waker {
    virtual ~Waker() = default;
    virtual void wake() = 0;
};

struct SyncWaker final : Waker {
    std::mutex m;
    std::condition_variable cv;
    bool fired = false;

    void wake() override {
        {
            std::lock_guard<std::mutex> lk(m);
            fired = true;
        }
        cv.notify_one();
    }
    void await() {
        std::unique_lock<std::mutex> lk(m);
        cv.wait(lk, [&] { return fired; });
        fired = false;
    }
};

// Holder of one channel side in the debug process-tree registry: a process or
// a channel buffer an endpoint is traveling through.
struct Holder {
    enum class Kind : uint8_t { None, Proc, Buf } kind = Kind::None;
    uint64_t id = 0;

    static Holder proc(uint64_t pid) { return {Kind::Proc, pid}; }
    static Holder buf(uint64_t chan) { return {Kind::Buf, chan}; }
};

// Debug counters plus, under --assert-invariants, the live client/provider
// graph. Every registry transition keeps (processes + ghosts) == channels + 1
// and the graph connected, which together say the communication structure is
// a tree.
class RunMonitor {
public:
    bool assert_invariants = false;

    std::atomic<int64_t> channel_ops{0};
    std::atomic<int64_t> messages_sent{0};
    std::atomic<int64_t> direction_flips{0};
    std::atomic<int64_t> forwards_sent{0};
    std::atomic<int64_t> forwards_adopted{0};
    std::atomic<int64_t> live_channels{0};
    std::atomic<int64_t> live_processes{0};
    std::atomic<int64_t> violations{0};

    void op() {
        if (assert_invariants) channel_ops.fetch_add(1, std::memory_order_relaxed);
    }

    // Tree registry (all no-ops unless assert_invariants and tree tracking on).
    void enable_tree() { tree_enabled_ = true; }
    void on_process_start(uint64_t pid);
    void on_spawn(uint64_t parent, uint64_t child, uint64_t chan);
    void on_handoff(uint64_t chan, Role side, uint64_t new_pid);
    void on_into_buffer(uint64_t chan, Role side, uint64_t via_chan);
    void on_retire(uint64_t chan);
    void on_process_exit(uint64_t pid);

    void note_violation(const std::string& what);
    // Structure check; throws RuntimePanic(TreeViolation) on failure.
    void check_tree_now();
    // End-of-run cleanliness: throws if anything is still live.
    void final_check();

private:
    void set_holder_locked(uint64_t chan, Role side, Holder h);
    void gc_ghost_locked(uint64_t pid);
    void count_check_locked();
    void full_check_locked();

    bool tree_enabled_ = false;
    std::mutex mu_;
    std::set<uint64_t> procs_;
    std::set<uint64_t> ghosts_;
    std::map<uint64_t, std::array<Holder, 2>> sides_;    // chan -> [provider, client]
    std::map<uint64_t, int> proc_refs_;                  // pid -> sides held
    uint64_t events_ = 0;
};

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

struct Channel {
    Channel(uint64_t id_, Width width_, RunMonitor* mon_)
        : id(id_), width(width_), mon(mon_) {
        cur_token[0].store(1, std::memory_order_relaxed);
        cur_token[1].store(1, std::memory_order_relaxed);
    }
    virtual ~Channel() = default;

    // Never blocks; wakes a waiting receiver of the message's direction.
    virtual void send(Message&& m, Direction dir) = 0;
    // Returns the next message flowing in `dir`, or registers the waker and
    // returns nullopt.
    virtual std::optional<Message> poll(Direction dir, Waker* w) = 0;
    virtual size_t occupancy() = 0;
    virtual const char* backend_name() const = 0;

    const uint64_t id;
    const Width width;
    RunMonitor* const mon;
    std::atomic<uint32_t> cur_token[2];    // indexed by Role
    std::atomic<bool> retired{false};
};

struct ChannelPair {
    Endpoint client;
    Endpoint provider;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChannelPair make_channel(Width width, Direction init_dir, RunMonitor* mon) = 0;
    virtual const char* name() const = 0;
};

// "opt" (single direction-flagged buffer, ring-sized to the inferred width) or
// "naive" (two unbounded one-way queues).
std::unique_ptr<Backend> make_backend(const std::string& name);
std::vector<std::string> backend_names();

// ---------------------------------------------------------------------------
// Channel operations
// ---------------------------------------------------------------------------

// Moves ownership of an endpoint; older copies become stale (debug-checked).
uint32_t transfer_token(const Endpoint& ep);

void send_value(Endpoint& ep, Message&& m, Direction dir, uint64_t pid);

enum class PollStatus : uint8_t { Ready, WouldBlock };

// One receive attempt. Buffered forwards are adopted transparently: the old
// channel is retired, `ep` starts pointing at the carried channel, and the
// attempt repeats; chains of forwards resolve in one call. On WouldBlock the
// waker is registered on whichever channel `ep` ended up at.
PollStatus recv_poll(Endpoint& ep, const Expect& want, Direction dir, Waker* w,
                     Message* out, uint64_t pid);

// Condition-variable flavor of recv_poll for direct use and tests.
Message recv_blocking(Endpoint& ep, const Expect& want, Direction dir, uint64_t pid = 0);

// Splices `provided` and `used` together by sending a forward message in the
// inferred direction; the caller must not touch either endpoint afterwards.
void forward_endpoints(Endpoint provided, Endpoint used, Direction dir, uint64_t pid);

// close: send the termination handshake. wait: receive it (blocking form).
void close_end(Endpoint& provider, uint64_t pid);
void wait_end_blocking(Endpoint& client, uint64_t pid = 0);

}  // namespace sessc::rt
