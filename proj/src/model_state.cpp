#include "dpbss/model_state.hpp"

#include <sstream>
#include <stdexcept>

namespace dpbss {

ModelState::ModelState(std::vector<int> idx) : indices(std::move(idx)) {
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0)
            throw std::invalid_argument("ModelState: negative index");
        if (i > 0 && indices[i] == indices[i - 1])
            throw std::invalid_argument("ModelState: duplicate index");
    }
}

int intersection_size(const ModelState& a, const ModelState& b) {
    int count = 0;
    std::size_t i = 0, j = 0;
    while (i < a.indices.size() && j < b.indices.size()) {
        if (a.indices[i] < b.indices[j]) {
            ++i;
        } else if (a.indices[i] > b.indices[j]) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

int hamming_distance(const ModelState& a, const ModelState& b) {
    const int common = intersection_size(a, b);
    return a.size() + b.size() - 2 * common;
}

ModelState swap_index(const ModelState& gamma, int removed, int added) {
    if (!gamma.contains(removed))
        throw std::invalid_argument("swap_index: removed index not in model");
    if (gamma.contains(added))
        throw std::invalid_argument("swap_index: added index already in model");
    ModelState out;
    out.indices.reserve(gamma.indices.size());
    for (int j : gamma.indices)
        if (j != removed)
            out.indices.push_back(j);
    auto pos = std::lower_bound(out.indices.begin(), out.indices.end(), added);
    out.indices.insert(pos, added);
    return out;
}

std::size_t ModelStateHash::operator()(const ModelState& m) const {
    // FNV-1a over the index words.
    std::size_t h = 1469598103934665603ULL;
    for (int j : m.indices) {
        h ^= static_cast<std::size_t>(j) + 0x9e3779b9;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_indices(const ModelState& m) {
    std::string out;
    for (std::size_t i = 0; i < m.indices.size(); ++i) {
        if (i > 0)
            out += ' ';
        out += std::to_string(m.indices[i]);
    }
    return out;
}

ModelState parse_indices(const std::string& text) {
    std::istringstream in(text);
    std::vector<int> idx;
    int v;
    while (in >> v)
        idx.push_back(v);
    return ModelState(std::move(idx));
}

} // namespace dpbss
