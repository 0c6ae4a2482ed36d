#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace morphlearn {

// Per-dimension bounds applied to every genome entry.
struct SearchBox {
    double lo = -1.0;
    double hi = 1.0;

    double clamp(double v) const noexcept { return v < lo ? lo : (v > hi ? hi : v); }
    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

// Flat real-valued parameter vector. `layout` names the controller family and
// morphology it was laid out for, e.g. "cpg:spider".
struct Genome {
    std::vector<double> values;
    std::string layout;

    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const Genome&, const Genome&) = default;
};

} // namespace morphlearn
