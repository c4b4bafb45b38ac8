#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace dpbss {

// A candidate model: a strictly increasing set of column indices into [0, p).
// The canonical (sorted, duplicate-free) form is established at construction
// and preserved by every operation that produces a ModelState.
struct ModelState {
    std::vector<int> indices;

    ModelState() = default;
    // Canonicalizes: sorts and rejects duplicates or negative indices.
    explicit ModelState(std::vector<int> idx);

    int size() const { return static_cast<int>(indices.size()); }
    bool empty() const { return indices.empty(); }
    bool contains(int j) const {
        return std::binary_search(indices.begin(), indices.end(), j);
    }

    friend bool operator==(const ModelState&, const ModelState&) = default;
    // Lexicographic order on the index vectors.
    friend auto operator<=>(const ModelState&, const ModelState&) = default;
};

// |a \ b| + |b \ a|.
int hamming_distance(const ModelState& a, const ModelState& b);

int intersection_size(const ModelState& a, const ModelState& b);

// New state with `removed` (which must be present) replaced by `added`
// (which must be absent).
ModelState swap_index(const ModelState& gamma, int removed, int added);

struct ModelStateHash {
    std::size_t operator()(const ModelState& m) const;
};

// Space-separated indices, e.g. "0 3 7". Empty model formats as "".
std::string format_indices(const ModelState& m);
ModelState parse_indices(const std::string& text);

} // namespace dpbss
