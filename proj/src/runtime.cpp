#include "sessc/runtime.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace sessc::rt {

const char* to_string(PanicKind k) {
    switch (k) {
        case PanicKind::BufferOverflow: return "BufferOverflow";
        case PanicKind::DirectionViolation: return "DirectionViolation";
        case PanicKind::FidelityViolation: return "FidelityViolation";
        case PanicKind::ForwardNotLast: return "ForwardNotLast";
        case PanicKind::EndpointReuse: return "EndpointReuse";
        case PanicKind::RetiredChannel: return "RetiredChannel";
        case PanicKind::TreeViolation: return "TreeViolation";
        case PanicKind::Deadlock: return "Deadlock";
        case PanicKind::DivideByZero: return "DivideByZero";
        case PanicKind::Timeout: return "Timeout";
    }
    return "RuntimePanic";
}

std::string describe(const Message& m) {
    switch (m.tag) {
        case MsgTag::Val:
            switch (m.kind) {
                case PayloadTag::Int: return "int " + std::to_string(m.bits);
                case PayloadTag::Bool: return m.bits ? "bool true" : "bool false";
                case PayloadTag::Chan: return "channel";
            }
            return "value";
        case MsgTag::Label: return "label #" + std::to_string(m.label);
        case MsgTag::Done: return "DONE";
        case MsgTag::Fwd: return "FWD";
    }
    return "?";
}

std::string describe(const Expect& e) {
    switch (e.tag) {
        case MsgTag::Val:
            switch (e.kind) {
                case PayloadTag::Int: return "int";
                case PayloadTag::Bool: return "bool";
                case PayloadTag::Chan: return "channel";
            }
            return "value";
        case MsgTag::Label: return "label";
        case MsgTag::Done: return "DONE";
        case MsgTag::Fwd: return "FWD";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// RunMonitor
// ---------------------------------------------------------------------------

void RunMonitor::note_violation(const std::string& what) {
    violations.fetch_add(1, std::memory_order_relaxed);
    (void)what;
}

void RunMonitor::set_holder_locked(uint64_t chan, Role side, Holder h) {
    auto& entry = sides_[chan];
    Holder& slot = entry[static_cast<size_t>(side)];
    if (slot.kind == Holder::Kind::Proc) {
        auto it = proc_refs_.find(slot.id);
        if (it != proc_refs_.end() && --it->second == 0) {
            proc_refs_.erase(it);
            gc_ghost_locked(slot.id);
        }
    }
    slot = h;
    if (h.kind == Holder::Kind::Proc) proc_refs_[h.id] += 1;
}

void RunMonitor::gc_ghost_locked(uint64_t pid) {
    if (ghosts_.count(pid) && !proc_refs_.count(pid)) ghosts_.erase(pid);
}

void RunMonitor::on_process_start(uint64_t pid) {
    if (!assert_invariants || !tree_enabled_) return;
    std::lock_guard<std::mutex> lk(mu_);
    procs_.insert(pid);
    count_check_locked();
}

void RunMonitor::on_spawn(uint64_t parent, uint64_t child, uint64_t chan) {
    if (!assert_invariants || !tree_enabled_) return;
    std::lock_guard<std::mutex> lk(mu_);
    procs_.insert(child);
    set_holder_locked(chan, Role::Provider, Holder::proc(child));
    set_holder_locked(chan, Role::Client, Holder::proc(parent));
    count_check_locked();
    if (++events_ % 512 == 0) full_check_locked();
}

void RunMonitor::on_handoff(uint64_t chan, Role side, uint64_t new_pid) {
    if (!assert_invariants || !tree_enabled_) return;
    std::lock_guard<std::mutex> lk(mu_);
    if (!sides_.count(chan)) return;
    set_holder_locked(chan, side, Holder::proc(new_pid));
    count_check_locked();
}

void RunMonitor::on_into_buffer(uint64_t chan, Role side, uint64_t via_chan) {
    if (!assert_invariants || !tree_enabled_) return;
    std::lock_guard<std::mutex> lk(mu_);
    if (!sides_.count(chan)) return;
    set_holder_locked(chan, side, Holder::buf(via_chan));
    count_check_locked();
}

void RunMonitor::on_retire(uint64_t chan) {
    if (!assert_invariants || !tree_enabled_) return;
    std::lock_guard<std::mutex> lk(mu_);
    auto it = sides_.find(chan);
    if (it == sides_.end()) return;
    for (const Holder& h : it->second) {
        if (h.kind == Holder::Kind::Proc) {
            auto rit = proc_refs_.find(h.id);
            if (rit != proc_refs_.end() && --rit->second == 0) {
                proc_refs_.erase(rit);
                gc_ghost_locked(h.id);
            }
        }
    }
    sides_.erase(it);
    count_check_locked();
}

void RunMonitor::on_process_exit(uint64_t pid) {
    if (!assert_invariants || !tree_enabled_) return;
    std::lock_guard<std::mutex> lk(mu_);
    procs_.erase(pid);
    if (proc_refs_.count(pid)) ghosts_.insert(pid);
    count_check_locked();
    if (++events_ % 512 == 0) full_check_locked();
}

void RunMonitor::count_check_locked() {
    // A tree on (procs + ghosts + channels) with two edges per channel needs
    // procs + ghosts == channels + 1.
    if (procs_.empty() && ghosts_.empty() && sides_.empty()) return;
    if (procs_.size() + ghosts_.size() != sides_.size() + 1) {
        note_violation("tree count");
        std::ostringstream os;
        os << "client/provider graph is not a tree: " << procs_.size() << " processes, "
           << ghosts_.size() << " finished holders, " << sides_.size() << " channels";
        throw RuntimePanic(PanicKind::TreeViolation, os.str());
    }
}

void RunMonitor::full_check_locked() {
    // Connectivity over processes, ghosts, and channel nodes.
    if (sides_.empty()) return;
    std::map<uint64_t, std::vector<uint64_t>> adj;    // node keys: pid*2, chan*2+1
    auto pkey = [](uint64_t pid) { return pid * 2; };
    auto ckey = [](uint64_t chan) { return chan * 2 + 1; };
    size_t nodes = procs_.size() + ghosts_.size() + sides_.size();
    for (const auto& [chan, holders] : sides_) {
        for (const Holder& h : holders) {
            uint64_t other;
            if (h.kind == Holder::Kind::Proc)
                other = pkey(h.id);
            else if (h.kind == Holder::Kind::Buf)
                other = ckey(h.id);
            else
                continue;
            adj[ckey(chan)].push_back(other);
            adj[other].push_back(ckey(chan));
        }
    }
    std::set<uint64_t> seen;
    std::vector<uint64_t> stack{adj.begin()->first};
    while (!stack.empty()) {
        uint64_t n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        for (uint64_t m : adj[n]) stack.push_back(m);
    }
    if (seen.size() != nodes) {
        note_violation("tree connectivity");
        throw RuntimePanic(PanicKind::TreeViolation,
                           "client/provider graph is disconnected");
    }
}

void RunMonitor::check_tree_now() {
    if (!assert_invariants || !tree_enabled_) return;
    std::lock_guard<std::mutex> lk(mu_);
    count_check_locked();
    full_check_locked();
}

void RunMonitor::final_check() {
    if (!assert_invariants) return;
    int64_t ch = live_channels.load();
    int64_t pr = live_processes.load();
    if (ch != 0 || pr != 0) {
        note_violation("termination cleanliness");
        throw RuntimePanic(PanicKind::TreeViolation,
                           "run ended with " + std::to_string(pr) + " processes and " +
                               std::to_string(ch) + " channels still live");
    }
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

namespace {

std::atomic<uint64_t> g_chan_ids{1};

void guard_send(Channel& ch, const Message& m, bool sealed) {
    if (ch.mon && ch.mon->assert_invariants) {
        if (ch.retired.load(std::memory_order_relaxed)) {
            ch.mon->note_violation("send on retired channel");
            throw RuntimePanic(PanicKind::RetiredChannel,
                               "send on channel #" + std::to_string(ch.id) +
                                   " after it was retired");
        }
        if (sealed) {
            ch.mon->note_violation("message after forward");
            throw RuntimePanic(PanicKind::ForwardNotLast,
                               describe(m) + " sent on channel #" + std::to_string(ch.id) +
                                   " after a forward; a forward must stay last");
        }
    }
}

// Optimized channel: one buffer, a direction flag, exclusive state, and one
// parked receiver slot per direction. Bounded sessions get a ring buffer of
// exactly the inferred width.
class BufferedChannel final : public Channel {
public:
    BufferedChannel(uint64_t id_, Width w, Direction init_dir, RunMonitor* mon_)
        : Channel(id_, w, mon_), dir_(init_dir), bounded_(w.is_bounded) {
        if (bounded_) ring_.resize(static_cast<size_t>(std::max(w.slots, 1)));
    }

    void send(Message&& m, Direction d) override {
        Waker* w = nullptr;
        {
            std::lock_guard<std::mutex> lk(m_);
            guard_send(*this, m, sealed_);
            if (count_ == 0) {
                if (dir_ != d) {
                    dir_ = d;
                    if (mon) mon->direction_flips.fetch_add(1, std::memory_order_relaxed);
                }
            } else if (dir_ != d && mon && mon->assert_invariants) {
                mon->note_violation("direction flip with non-empty buffer");
                throw RuntimePanic(
                    PanicKind::DirectionViolation,
                    "direction changed on channel #" + std::to_string(id) + " while " +
                        std::to_string(count_) + " messages are still buffered");
            }
            if (m.tag == MsgTag::Fwd) sealed_ = true;
            if (bounded_) {
                if (count_ == ring_.size())
                    throw RuntimePanic(PanicKind::BufferOverflow,
                                       "channel #" + std::to_string(id) + " holds " +
                                           std::to_string(count_) + " messages, width is " +
                                           std::to_string(ring_.size()));
                ring_[(head_ + count_) % ring_.size()] = std::move(m);
                ++count_;
            } else {
                q_.push_back(std::move(m));
                ++count_;
            }
            w = waiters_[static_cast<size_t>(d)];
            waiters_[static_cast<size_t>(d)] = nullptr;
        }
        if (w) w->wake();
    }

    std::optional<Message> poll(Direction d, Waker* w) override {
        std::lock_guard<std::mutex> lk(m_);
        if (count_ > 0 && dir_ == d) {
            Message out;
            if (bounded_) {
                out = std::move(ring_[head_]);
                head_ = (head_ + 1) % ring_.size();
            } else {
                out = std::move(q_.front());
                q_.pop_front();
            }
            --count_;
            return out;
        }
        waiters_[static_cast<size_t>(d)] = w;
        return std::nullopt;
    }

    size_t occupancy() override {
        std::lock_guard<std::mutex> lk(m_);
        return count_;
    }

    const char* backend_name() const override { return "opt"; }

private:
    std::mutex m_;
    Direction dir_;
    const bool bounded_;
    std::vector<Message> ring_;
    std::deque<Message> q_;
    size_t head_ = 0;
    size_t count_ = 0;
    bool sealed_ = false;
    Waker* waiters_[2] = {nullptr, nullptr};
};

// Naive channel: a pair of unbounded one-way queues, the way a bidirectional
// channel is usually assembled from two conventional ones.
class TwoQueueChannel final : public Channel {
public:
    TwoQueueChannel(uint64_t id_, Width w, RunMonitor* mon_) : Channel(id_, w, mon_) {}

    void send(Message&& m, Direction d) override {
        Lane& lane = lanes_[static_cast<size_t>(d)];
        Waker* w = nullptr;
        {
            std::lock_guard<std::mutex> lk(lane.m);
            guard_send(*this, m, sealed_.load(std::memory_order_relaxed));
            if (mon && mon->assert_invariants && width.is_bounded) {
                size_t total = total_.load(std::memory_order_relaxed);
                if (total + 1 > static_cast<size_t>(width.slots)) {
                    mon->note_violation("occupancy above inferred width");
                    throw RuntimePanic(PanicKind::BufferOverflow,
                                       "channel #" + std::to_string(id) + " holds " +
                                           std::to_string(total + 1) +
                                           " messages, width is " +
                                           std::to_string(width.slots));
                }
            }
            if (m.tag == MsgTag::Fwd) sealed_.store(true, std::memory_order_relaxed);
            lane.q.push_back(std::move(m));
            total_.fetch_add(1, std::memory_order_relaxed);
            w = lane.waiter;
            lane.waiter = nullptr;
        }
        if (w) w->wake();
    }

    std::optional<Message> poll(Direction d, Waker* w) override {
        Lane& lane = lanes_[static_cast<size_t>(d)];
        std::lock_guard<std::mutex> lk(lane.m);
        if (!lane.q.empty()) {
            Message out = std::move(lane.q.front());
            lane.q.pop_front();
            total_.fetch_sub(1, std::memory_order_relaxed);
            return out;
        }
        lane.waiter = w;
        return std::nullopt;
    }

    size_t occupancy() override { return total_.load(std::memory_order_relaxed); }

    const char* backend_name() const override { return "naive"; }

private:
    struct Lane {
        std::mutex m;
        std::deque<Message> q;
        Waker* waiter = nullptr;
    };
    Lane lanes_[2];
    std::atomic<size_t> total_{0};
    std::atomic<bool> sealed_{false};
};

ChannelPair wrap(std::shared_ptr<Channel> ch, RunMonitor* mon) {
    if (mon) mon->live_channels.fetch_add(1, std::memory_order_relaxed);
    ChannelPair pair;
    pair.provider = Endpoint{ch, Role::Provider, 1};
    pair.client = Endpoint{std::move(ch), Role::Client, 1};
    return pair;
}

class OptBackend final : public Backend {
public:
    ChannelPair make_channel(Width w, Direction init_dir, RunMonitor* mon) override {
        auto ch = std::make_shared<BufferedChannel>(
            g_chan_ids.fetch_add(1, std::memory_order_relaxed), w, init_dir, mon);
        return wrap(std::move(ch), mon);
    }
    const char* name() const override { return "opt"; }
};

class NaiveBackend final : public Backend {
public:
    ChannelPair make_channel(Width w, Direction init_dir, RunMonitor* mon) override {
        (void)init_dir;    // two one-way queues need no direction state
        auto ch = std::make_shared<TwoQueueChannel>(
            g_chan_ids.fetch_add(1, std::memory_order_relaxed), w, mon);
        return wrap(std::move(ch), mon);
    }
    const char* name() const override { return "naive"; }
};

void ensure_usable(const Endpoint& ep) {
    RunMonitor* mon = ep.chan->mon;
    if (!mon || !mon->assert_invariants) return;
    if (ep.chan->retired.load(std::memory_order_relaxed)) {
        mon->note_violation("use of retired channel");
        throw RuntimePanic(PanicKind::RetiredChannel,
                           "operation on channel #" + std::to_string(ep.chan->id) +
                               " after it was retired");
    }
    uint32_t cur =
        ep.chan->cur_token[static_cast<size_t>(ep.role)].load(std::memory_order_relaxed);
    if (ep.token != cur) {
        mon->note_violation("endpoint double-use");
        throw RuntimePanic(PanicKind::EndpointReuse,
                           std::string(to_string(ep.role)) + " endpoint of channel #" +
                               std::to_string(ep.chan->id) +
                               " used after its ownership moved");
    }
}

void retire(Channel& ch) {
    ch.retired.store(true, std::memory_order_relaxed);
    if (ch.mon) {
        ch.mon->live_channels.fetch_sub(1, std::memory_order_relaxed);
        ch.mon->on_retire(ch.id);
    }
}

}  // namespace

std::unique_ptr<Backend> make_backend(const std::string& name) {
    if (name == "opt") return std::make_unique<OptBackend>();
    if (name == "naive") return std::make_unique<NaiveBackend>();
    return nullptr;
}

std::vector<std::string> backend_names() { return {"opt", "naive"}; }

uint32_t transfer_token(const Endpoint& ep) {
    return ep.chan->cur_token[static_cast<size_t>(ep.role)].fetch_add(
               1, std::memory_order_relaxed) +
           1;
}

void send_value(Endpoint& ep, Message&& m, Direction dir, uint64_t pid) {
    (void)pid;
    ensure_usable(ep);
    RunMonitor* mon = ep.chan->mon;
    if (mon) {
        mon->op();
        if (mon->assert_invariants) {
            mon->messages_sent.fetch_add(1, std::memory_order_relaxed);
            if (m.tag == MsgTag::Fwd)
                mon->forwards_sent.fetch_add(1, std::memory_order_relaxed);
        }
    }
    ep.chan->send(std::move(m), dir);
}

PollStatus recv_poll(Endpoint& ep, const Expect& want, Direction dir, Waker* w,
                     Message* out, uint64_t pid) {
    for (;;) {
        ensure_usable(ep);
        RunMonitor* mon = ep.chan->mon;
        auto m = ep.chan->poll(dir, w);
        if (!m) return PollStatus::WouldBlock;
        if (mon) mon->op();
        if (m->tag == MsgTag::Fwd) {
            // The forwarder is gone; this channel dies and the carried one
            // takes its place. Retry the same receive there.
            Endpoint adopted = std::move(m->carried);
            if (adopted.role != ep.role)
                throw RuntimePanic(PanicKind::FidelityViolation,
                                   "forward carried the wrong endpoint role");
            uint64_t old_id = ep.chan->id;
            retire(*ep.chan);
            adopted.token = transfer_token(adopted);
            if (mon) {
                mon->forwards_adopted.fetch_add(1, std::memory_order_relaxed);
                mon->on_handoff(adopted.chan->id, adopted.role, pid);
                (void)old_id;
                mon->check_tree_now();
            }
            ep = std::move(adopted);
            continue;
        }
        if (m->tag != want.tag ||
            (m->tag == MsgTag::Val && m->kind != want.kind)) {
            if (mon) mon->note_violation("fidelity");
            throw RuntimePanic(PanicKind::FidelityViolation,
                               "expected " + describe(want) + ", received " + describe(*m) +
                                   " on channel #" + std::to_string(ep.chan->id));
        }
        if (m->tag == MsgTag::Done) retire(*ep.chan);
        if (m->tag == MsgTag::Val && m->kind == PayloadTag::Chan) {
            m->carried.token = transfer_token(m->carried);
            if (mon) mon->on_handoff(m->carried.chan->id, m->carried.role, pid);
        }
        *out = std::move(*m);
        return PollStatus::Ready;
    }
}

Message recv_blocking(Endpoint& ep, const Expect& want, Direction dir, uint64_t pid) {
    SyncWaker w;
    Message out;
    while (recv_poll(ep, want, dir, &w, &out, pid) == PollStatus::WouldBlock) w.await();
    return out;
}

void forward_endpoints(Endpoint provided, Endpoint used, Direction dir, uint64_t pid) {
    if (dir == Direction::ToClient) {
        // The forward rides the provided channel toward our client, carrying
        // the endpoint we were using.
        used.token = transfer_token(used);
        RunMonitor* mon = provided.chan->mon;
        if (mon) mon->on_into_buffer(used.chan->id, used.role, provided.chan->id);
        send_value(provided, Message::fwd(std::move(used)), dir, pid);
    } else {
        // The forward rides the used channel toward its provider, carrying our
        // provider end.
        provided.token = transfer_token(provided);
        RunMonitor* mon = used.chan->mon;
        if (mon) mon->on_into_buffer(provided.chan->id, provided.role, used.chan->id);
        send_value(used, Message::fwd(std::move(provided)), dir, pid);
    }
}

void close_end(Endpoint& provider, uint64_t pid) {
    send_value(provider, Message::done(), Direction::ToClient, pid);
}

void wait_end_blocking(Endpoint& client, uint64_t pid) {
    recv_blocking(client, Expect::done(), Direction::ToClient, pid);
}

}  // namespace sessc::rt
