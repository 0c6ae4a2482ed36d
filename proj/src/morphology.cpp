#include "morphlearn/morphology.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

namespace morphlearn {

using nlohmann::json;

std::string_view kind_name(ModuleKind kind) noexcept
{
    switch (kind) {
    case ModuleKind::Core: return "core";
    case ModuleKind::Brick: return "brick";
    case ModuleKind::ActiveHinge: return "active_hinge";
    }
    return "unknown";
}

int slot_count(ModuleKind kind) noexcept
{
    switch (kind) {
    case ModuleKind::Core: return 4;
    case ModuleKind::Brick: return 3;
    case ModuleKind::ActiveHinge: return 1;
    }
    return 0;
}

namespace {

ModuleKind kind_from_name(const std::string& s)
{
    if (s == "core")
        return ModuleKind::Core;
    if (s == "brick")
        return ModuleKind::Brick;
    if (s == "active_hinge")
        return ModuleKind::ActiveHinge;
    throw MorphologyError("unknown module kind '" + s + "'");
}

void check_orientation(int orientation)
{
    if (orientation != 0 && orientation != 90)
        throw MorphologyError("orientation must be 0 or 90, got " + std::to_string(orientation));
}

} // namespace

MorphologyTree::MorphologyTree() : MorphologyTree("robot") {}

MorphologyTree::MorphologyTree(std::string name, int core_orientation) : name_(std::move(name))
{
    check_orientation(core_orientation);
    Module core;
    core.orientation = core_orientation;
    modules_.push_back(core);
}

int MorphologyTree::attach(int parent, int slot, ModuleKind kind, int orientation)
{
    if (parent < 0 || static_cast<std::size_t>(parent) >= modules_.size())
        throw MorphologyError("attach: no module with index " + std::to_string(parent));
    if (kind == ModuleKind::Core)
        throw MorphologyError("multiple cores: only the root may be a core");
    check_orientation(orientation);
    Module& p = modules_[static_cast<std::size_t>(parent)];
    if (slot < 0 || slot >= slot_count(p.kind))
        throw MorphologyError("slot " + std::to_string(slot) + " out of range for "
                              + std::string(kind_name(p.kind)) + " (has "
                              + std::to_string(slot_count(p.kind)) + " slots)");
    if (p.children[static_cast<std::size_t>(slot)] != kNoModule)
        throw MorphologyError("slot " + std::to_string(slot) + " already occupied");

    Module m;
    m.kind = kind;
    m.orientation = orientation;
    m.parent = parent;
    m.parent_slot = slot;
    const int index = static_cast<int>(modules_.size());
    modules_[static_cast<std::size_t>(parent)].children[static_cast<std::size_t>(slot)] = index;
    modules_.push_back(m);
    return index;
}

void MorphologyTree::validate() const
{
    if (modules_.empty() || modules_[0].kind != ModuleKind::Core || modules_[0].parent != kNoModule)
        throw MorphologyError("root must be a core");
    const int n = static_cast<int>(modules_.size());
    for (int i = 0; i < n; ++i) {
        const Module& m = modules_[static_cast<std::size_t>(i)];
        if (i > 0 && m.kind == ModuleKind::Core)
            throw MorphologyError("multiple cores");
        check_orientation(m.orientation);
        for (int s = 0; s < 4; ++s) {
            const int c = m.children[static_cast<std::size_t>(s)];
            if (c == kNoModule)
                continue;
            if (s >= slot_count(m.kind))
                throw MorphologyError("slot " + std::to_string(s) + " out of range for "
                                      + std::string(kind_name(m.kind)));
            if (c <= 0 || c >= n)
                throw MorphologyError("dangling child index " + std::to_string(c));
            const Module& child = modules_[static_cast<std::size_t>(c)];
            if (child.parent != i || child.parent_slot != s)
                throw MorphologyError("parent/child links disagree at module " + std::to_string(c));
        }
        // Walking up must reach the root within n steps.
        int cursor = i;
        for (int steps = 0; cursor != 0; ++steps) {
            if (steps > n || cursor < 0 || cursor >= n)
                throw MorphologyError("cycle detected through module " + std::to_string(i));
            cursor = modules_[static_cast<std::size_t>(cursor)].parent;
        }
    }
}

std::size_t MorphologyTree::hinge_count() const
{
    return static_cast<std::size_t>(std::count_if(modules_.begin(), modules_.end(), [](const Module& m) {
        return m.kind == ModuleKind::ActiveHinge;
    }));
}

namespace {

void parse_children(MorphologyTree& tree, int parent, const json& node, std::size_t depth)
{
    if (depth > 10000)
        throw MorphologyError("module nesting too deep");
    if (!node.contains("children"))
        return;
    const json& children = node.at("children");
    if (!children.is_object())
        throw MorphologyError("'children' must be an object keyed by slot");
    for (const auto& [key, child] : children.items()) {
        int slot = -1;
        try {
            std::size_t used = 0;
            slot = std::stoi(key, &used);
            if (used != key.size())
                slot = -1;
        } catch (const std::exception&) {
            slot = -1;
        }
        if (slot < 0)
            throw MorphologyError("slot key '" + key + "' is not a decimal slot index");
        if (!child.is_object())
            throw MorphologyError("module at slot " + key + " is not an object");
        const ModuleKind kind = kind_from_name(child.at("kind").get<std::string>());
        const int orientation = child.value("orientation", 0);
        const int index = tree.attach(parent, slot, kind, orientation);
        parse_children(tree, index, child, depth + 1);
    }
}

json module_to_json(const MorphologyTree& tree, int index)
{
    const Module& m = tree.module(index);
    json out;
    out["kind"] = kind_name(m.kind);
    out["orientation"] = m.orientation;
    json children = json::object();
    for (int s = 0; s < 4; ++s) {
        const int c = m.children[static_cast<std::size_t>(s)];
        if (c != kNoModule)
            children[std::to_string(s)] = module_to_json(tree, c);
    }
    out["children"] = children;
    return out;
}

} // namespace

MorphologyTree morphology_from_json(const json& doc)
{
    try {
        if (!doc.is_object())
            throw MorphologyError("morphology document must be an object");
        const json& root = doc.at("root");
        if (kind_from_name(root.at("kind").get<std::string>()) != ModuleKind::Core)
            throw MorphologyError("root must be a core");
        MorphologyTree tree(doc.value("name", std::string("robot")), root.value("orientation", 0));
        parse_children(tree, 0, root, 0);
        tree.validate();
        return tree;
    } catch (const json::exception& e) {
        throw MorphologyError(std::string("malformed morphology document: ") + e.what());
    }
}

MorphologyTree parse_morphology(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw MorphologyError(std::string("morphology document is not valid JSON: ") + e.what());
    }
    return morphology_from_json(doc);
}

json morphology_to_json(const MorphologyTree& tree)
{
    json doc;
    doc["name"] = tree.name();
    doc["root"] = module_to_json(tree, 0);
    return doc;
}

std::string emit_morphology(const MorphologyTree& tree) { return morphology_to_json(tree).dump(2) + "\n"; }

MorphologyTree load_morphology(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw MorphologyError("cannot open morphology file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_morphology(ss.str());
}

void save_morphology(const MorphologyTree& tree, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw MorphologyError("cannot write morphology file " + path.string());
    out << emit_morphology(tree);
}

std::vector<int> enumerate_hinges(const MorphologyTree& tree)
{
    std::vector<int> hinges;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const Module& m = tree.module(i);
        if (m.kind == ModuleKind::ActiveHinge)
            hinges.push_back(i);
        for (int s = 3; s >= 0; --s)
            if (m.children[static_cast<std::size_t>(s)] != kNoModule)
                stack.push_back(m.children[static_cast<std::size_t>(s)]);
    }
    return hinges;
}

NeighbourGraph neighbour_pairs(const MorphologyTree& tree)
{
    const auto hinges = enumerate_hinges(tree);
    const std::size_t n_modules = tree.module_count();
    std::vector<int> hinge_of(n_modules, -1);
    for (std::size_t h = 0; h < hinges.size(); ++h)
        hinge_of[static_cast<std::size_t>(hinges[h])] = static_cast<int>(h);

    NeighbourGraph graph;
    graph.hinge_count = hinges.size();

    // Breadth-first search from each hinge, cut off at depth two.
    std::vector<int> dist(n_modules);
    for (std::size_t h = 0; h < hinges.size(); ++h) {
        std::fill(dist.begin(), dist.end(), -1);
        std::deque<int> queue{hinges[h]};
        dist[static_cast<std::size_t>(hinges[h])] = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            const int du = dist[static_cast<std::size_t>(u)];
            if (du == 2)
                continue;
            const Module& m = tree.module(u);
            auto visit = [&](int v) {
                if (v == kNoModule || dist[static_cast<std::size_t>(v)] != -1)
                    return;
                dist[static_cast<std::size_t>(v)] = du + 1;
                queue.push_back(v);
            };
            visit(m.parent);
            for (int c : m.children)
                visit(c);
        }
        for (std::size_t k = h + 1; k < hinges.size(); ++k) {
            const int d = dist[static_cast<std::size_t>(hinges[k])];
            if (d >= 1 && d <= 2)
                graph.pairs.emplace_back(h, k);
        }
    }
    return graph;
}

std::vector<int> module_headings(const MorphologyTree& tree)
{
    std::vector<int> heading(tree.module_count(), 0);
    // Parents always precede children in the flat array.
    for (std::size_t i = 1; i < tree.module_count(); ++i) {
        const Module& m = tree.modules()[i];
        const Module& p = tree.module(m.parent);
        if (p.kind == ModuleKind::Core) {
            heading[i] = m.parent_slot;
        } else {
            static constexpr int turn[3] = {0, 1, 3};
            heading[i] = (heading[static_cast<std::size_t>(m.parent)] + turn[m.parent_slot]) % 4;
        }
    }
    return heading;
}

MorphologyTree generate_random_morphology(RngStream& rng, std::size_t max_modules, std::string name)
{
    if (max_modules < 2)
        throw MorphologyError("generate_random_morphology: max_modules must be at least 2");

    for (;;) {
        MorphologyTree tree(name);
        const std::size_t target = 2 + static_cast<std::size_t>(rng.below(max_modules - 1));
        while (tree.module_count() < target) {
            std::vector<std::pair<int, int>> free_slots;
            for (std::size_t i = 0; i < tree.module_count(); ++i) {
                const Module& m = tree.modules()[i];
                for (int s = 0; s < slot_count(m.kind); ++s)
                    if (m.children[static_cast<std::size_t>(s)] == kNoModule)
                        free_slots.emplace_back(static_cast<int>(i), s);
            }
            const auto [parent, slot] = free_slots[rng.below(free_slots.size())];
            const ModuleKind kind = rng.bernoulli(0.5) ? ModuleKind::ActiveHinge : ModuleKind::Brick;
            const int orientation = rng.bernoulli(0.5) ? 90 : 0;
            tree.attach(parent, slot, kind, orientation);
        }
        if (tree.hinge_count() > 0)
            return tree;
    }
}

std::vector<std::string> bundled_robot_names() { return {"spider", "gecko", "snake", "babyA", "babyB"}; }

std::filesystem::path robot_data_dir()
{
#ifdef MORPHLEARN_DATA_DIR
    return std::filesystem::path(MORPHLEARN_DATA_DIR) / "robots";
#else
    return std::filesystem::path("data") / "robots";
#endif
}

MorphologyTree load_bundled_robot(std::string_view name)
{
    return load_morphology(robot_data_dir() / (std::string(name) + ".json"));
}

} // namespace morphlearn
