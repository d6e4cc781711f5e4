#include "sessc/session_types.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>

namespace sessc {

const char* to_string(Direction d) {
    return d == Direction::ToClient ? "toClient" : "toProvider";
}

const char* to_string(Role r) {
    return r == Role::Provider ? "provider" : "client";
}

Payload Payload::of_chan(SessionType s) {
    Payload p;
    p.tag = PayloadTag::Chan;
    p.chan = std::make_shared<const SessionType>(std::move(s));
    return p;
}

const SessionType* ChoiceDecl::branch(const std::string& label) const {
    for (const auto& b : branches) {
        if (b.label == label) return &b.body;
    }
    return nullptr;
}

void ChoiceEnv::add(ChoiceDecl decl) {
    if (decls_.find(decl.name) == decls_.end()) order_.push_back(decl.name);
    decls_[decl.name] = std::move(decl);
}

const ChoiceDecl* ChoiceEnv::find(const std::string& name) const {
    auto it = decls_.find(name);
    return it == decls_.end() ? nullptr : &it->second;
}

SessionType dual(const SessionType& t) {
    SessionType d;
    d.steps.reserve(t.steps.size());
    for (const auto& a : t.steps) d.steps.push_back({flip(a.dir), a.payload});
    d.term = t.term;
    if (d.term.kind == TermKind::Choice) d.term.polarity = flip(d.term.polarity);
    return d;
}

const SessionType& unfold(const ChoiceEnv& env, const std::string& name,
                          const std::string& label) {
    const ChoiceDecl* decl = env.find(name);
    if (!decl) throw UnknownChoiceError(name);
    const SessionType* body = decl->branch(label);
    if (!body) throw UnknownLabelError(name, label);
    return *body;
}

static bool payloads_equal(const Payload& a, const Payload& b) {
    if (a.tag != b.tag) return false;
    if (a.tag != PayloadTag::Chan) return true;
    return types_equal(*a.chan, *b.chan);
}

bool types_equal(const SessionType& a, const SessionType& b) {
    if (a.steps.size() != b.steps.size()) return false;
    for (size_t i = 0; i < a.steps.size(); ++i) {
        if (a.steps[i].dir != b.steps[i].dir) return false;
        if (!payloads_equal(a.steps[i].payload, b.steps[i].payload)) return false;
    }
    if (a.term.kind != b.term.kind) return false;
    if (a.term.kind == TermKind::Choice) {
        return a.term.choice == b.term.choice && a.term.polarity == b.term.polarity;
    }
    return true;
}

Direction initial_direction(const ChoiceEnv& env, const SessionType& t) {
    (void)env;
    if (!t.steps.empty()) return t.steps.front().dir;
    if (t.term.kind == TermKind::Choice) return t.term.polarity;
    return Direction::ToClient;    // only the termination handshake flows
}

static void collect_undeclared(const ChoiceEnv& env, const SessionType& t,
                               std::set<std::string>& seen,
                               std::vector<std::string>& out) {
    if (t.term.kind != TermKind::Choice) return;
    const std::string& name = t.term.choice;
    if (seen.count(name)) return;
    seen.insert(name);
    const ChoiceDecl* decl = env.find(name);
    if (!decl) {
        out.push_back(name);
        return;
    }
    for (const auto& b : decl->branches) collect_undeclared(env, b.body, seen, out);
}

std::vector<std::string> undeclared_choices(const ChoiceEnv& env, const SessionType& t) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    collect_undeclared(env, t, seen, out);
    return out;
}

std::vector<TypeGraphEdge> TypeGraph::intra_edges() const {
    std::vector<TypeGraphEdge> out;
    for (const auto& e : edges)
        if (!e.sync) out.push_back(e);
    return out;
}

std::vector<TypeGraphEdge> TypeGraph::sync_edges() const {
    std::vector<TypeGraphEdge> out;
    for (const auto& e : edges)
        if (e.sync) out.push_back(e);
    return out;
}

bool TypeGraph::coloring_consistent() const {
    for (const auto& e : edges) {
        bool same = nodes[e.from].color == nodes[e.to].color;
        if (e.sync == same) return false;
    }
    return true;
}

std::string to_string(const Width& w) {
    return w.is_bounded ? std::to_string(w.slots) : std::string("unbounded");
}

namespace {

std::string payload_text(const Payload& p);

std::string action_text(const Action& a) {
    std::string s = a.dir == Direction::ToClient ? "!" : "?";
    return s + payload_text(a.payload);
}

std::string payload_text(const Payload& p) {
    switch (p.tag) {
        case PayloadTag::Int: return "int";
        case PayloadTag::Bool: return "bool";
        case PayloadTag::Chan: return to_string(*p.chan);
    }
    return "?";
}

class GraphBuilder {
public:
    GraphBuilder(const ChoiceEnv& env, TypeGraph& g) : env_(env), g_(g) {}

    // Returns the entry node of the expansion of t.
    int expand(const SessionType& t) {
        int first = -1;
        int prev = -1;
        for (const auto& a : t.steps) {
            int n = add_node(a.dir, action_text(a));
            if (first < 0) first = n;
            if (prev >= 0) add_edge(prev, n);
            prev = n;
        }
        int tail;
        if (t.term.kind == TermKind::End) {
            tail = add_node(Direction::ToClient, "DONE");
        } else {
            tail = choice_node(t.term.choice, t.term.polarity);
        }
        if (prev >= 0) add_edge(prev, tail);
        return first >= 0 ? first : tail;
    }

private:
    int choice_node(const std::string& name, Direction pol) {
        auto key = std::make_pair(name, pol);
        auto it = choice_nodes_.find(key);
        if (it != choice_nodes_.end()) return it->second;
        const ChoiceDecl* decl = env_.find(name);
        if (!decl) throw UnknownChoiceError(name);
        std::string origin = (pol == Direction::ToClient ? "!choice " : "?choice ") + name;
        int node = add_node(pol, origin);
        choice_nodes_[key] = node;
        for (const auto& b : decl->branches) {
            int entry = expand(b.body);
            add_edge(node, entry);
        }
        return node;
    }

    int add_node(Direction color, std::string origin) {
        g_.nodes.push_back({color, std::move(origin)});
        return static_cast<int>(g_.nodes.size()) - 1;
    }

    void add_edge(int from, int to) {
        if (!edge_set_.insert({from, to}).second) return;
        bool sync = g_.nodes[from].color != g_.nodes[to].color;
        g_.edges.push_back({from, to, sync});
    }

    const ChoiceEnv& env_;
    TypeGraph& g_;
    std::map<std::pair<std::string, Direction>, int> choice_nodes_;
    std::set<std::pair<int, int>> edge_set_;
};

// Longest path (in nodes) of the given color over intra edges only, or
// nullopt when that subgraph is cyclic.
std::optional<int> longest_mono_path(const TypeGraph& g, Direction color) {
    int n = static_cast<int>(g.nodes.size());
    std::vector<std::vector<int>> adj(n);
    std::vector<int> indeg(n, 0);
    std::vector<bool> in_color(n, false);
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (g.nodes[i].color == color) {
            in_color[i] = true;
            ++count;
        }
    }
    for (const auto& e : g.edges) {
        if (e.sync || !in_color[e.from] || !in_color[e.to]) continue;
        adj[e.from].push_back(e.to);
        ++indeg[e.to];
    }
    std::vector<int> order;
    order.reserve(count);
    std::vector<int> len(n, 0);
    for (int i = 0; i < n; ++i) {
        if (in_color[i] && indeg[i] == 0) {
            len[i] = 1;
            order.push_back(i);
        }
    }
    for (size_t qi = 0; qi < order.size(); ++qi) {
        int u = order[qi];
        for (int v : adj[u]) {
            len[v] = std::max(len[v], len[u] + 1);
            if (--indeg[v] == 0) order.push_back(v);
        }
    }
    if (static_cast<int>(order.size()) != count) return std::nullopt;    // cycle
    int best = 0;
    for (int i = 0; i < n; ++i)
        if (in_color[i]) best = std::max(best, len[i]);
    return best;
}

}  // namespace

TypeGraph build_type_graph(const ChoiceEnv& env, const SessionType& t) {
    TypeGraph g;
    GraphBuilder b(env, g);
    g.entry = b.expand(t);
    assert(g.coloring_consistent());
    return g;
}

Width infer_width(const TypeGraph& g) {
    auto green = longest_mono_path(g, Direction::ToClient);
    auto red = longest_mono_path(g, Direction::ToProvider);
    if (!green || !red) return Width::unbounded();
    return Width::bounded(std::max(*green, *red));
}

Width infer_width(const ChoiceEnv& env, const SessionType& t) {
    return infer_width(build_type_graph(env, t));
}

std::string to_string(const SessionType& t) {
    std::ostringstream os;
    os << "<";
    for (const auto& a : t.steps) os << action_text(a) << "; ";
    if (t.term.kind == TermKind::Choice) {
        os << (t.term.polarity == Direction::ToClient ? "!" : "?") << "choice "
           << t.term.choice;
    }
    std::string s = os.str();
    // "<!int; >" -> "<!int;>"
    if (s.size() >= 2 && s.substr(s.size() - 2) == "; " && t.term.kind == TermKind::End)
        s.pop_back();
    return s + ">";
}

}  // namespace sessc
