#pragma once

#include "morphlearn/rng.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace morphlearn {

enum class ModuleKind { Core, Brick, ActiveHinge };

std::string_view kind_name(ModuleKind kind) noexcept;
// Number of child slots: core 4, brick 3, active hinge 1.
int slot_count(ModuleKind kind) noexcept;

inline constexpr int kNoModule = -1;

struct Module {
    ModuleKind kind = ModuleKind::Core;
    int orientation = 0; // degrees, 0 or 90
    int parent = kNoModule;
    int parent_slot = kNoModule;
    std::array<int, 4> children{kNoModule, kNoModule, kNoModule, kNoModule};

    friend bool operator==(const Module&, const Module&) = default;
};

// Rooted module tree stored as a flat array; modules()[0] is the core.
class MorphologyTree {
public:
    MorphologyTree();
    explicit MorphologyTree(std::string name, int core_orientation = 0);

    const std::string& name() const noexcept { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    const std::vector<Module>& modules() const noexcept { return modules_; }
    const Module& module(int index) const { return modules_.at(static_cast<std::size_t>(index)); }
    std::size_t module_count() const noexcept { return modules_.size(); }

    // Attaches a new module under `parent` at `slot`; returns its index.
    // Throws MorphologyError on a bad slot, an occupied slot or a second core.
    int attach(int parent, int slot, ModuleKind kind, int orientation = 0);

    // Re-checks every structural invariant (single core at the root, slot
    // arities, parent/child agreement, acyclicity).
    void validate() const;

    std::size_t hinge_count() const;

    friend bool operator==(const MorphologyTree&, const MorphologyTree&) = default;

private:
    std::string name_;
    std::vector<Module> modules_;
};

struct NeighbourGraph {
    std::size_t hinge_count = 0;
    // Unordered pairs stored as (i, j) with i < j, sorted lexicographically.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// Parses the structured-text morphology document:
//   {"name": ..., "root": {"kind": "core", "orientation": 0|90,
//                          "children": {"<slot>": <module>, ...}}}
// Nested objects cannot express a cycle, so the cycle check lives in validate().
MorphologyTree parse_morphology(std::string_view document);
MorphologyTree morphology_from_json(const nlohmann::json& doc);
nlohmann::json morphology_to_json(const MorphologyTree& tree);
// Canonical text form: two-space indentation, keys sorted, trailing newline.
std::string emit_morphology(const MorphologyTree& tree);

MorphologyTree load_morphology(const std::filesystem::path& path);
void save_morphology(const MorphologyTree& tree, const std::filesystem::path& path);

// Module indices of the active hinges in pre-order depth-first order,
// children visited by ascending slot. Position in the result is the hinge index.
std::vector<int> enumerate_hinges(const MorphologyTree& tree);

// All hinge pairs whose distance in the module tree (every module is a node,
// bricks included) is 1 or 2.
NeighbourGraph neighbour_pairs(const MorphologyTree& tree);

// Grid heading of every module: 0 = +x, 1 = +y, 2 = -x, 3 = -y. The core faces
// +x; a child attached to core slot s heads s. For other modules slot 0
// continues straight, slot 1 turns left and slot 2 turns right.
std::vector<int> module_headings(const MorphologyTree& tree);

// Random tree with between 2 and max_modules modules (core included) and at
// least one active hinge. Draws are retried until a hinge is present.
MorphologyTree generate_random_morphology(RngStream& rng, std::size_t max_modules,
                                          std::string name = "random");

// Hand-specified robots shipped under data/robots.
std::vector<std::string> bundled_robot_names();
std::filesystem::path robot_data_dir();
MorphologyTree load_bundled_robot(std::string_view name);

} // namespace morphlearn
