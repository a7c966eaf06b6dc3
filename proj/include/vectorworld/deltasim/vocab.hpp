#pragma once

#include <string>
#include <vector>

#include "vectorworld/scenegraph/se2.hpp"
#include "vectorworld/util/rng.hpp"

namespace vw::dsim {

struct Delta {
    double dx = 0, dy = 0, dtheta = 0;
};

// 384 body-frame SE(2) deltas; row 0 is the exact zero action.
struct KDisksVocab {
    std::vector<Delta> rows;

    int size() const { return static_cast<int>(rows.size()); }
    const Delta& operator[](int i) const { return rows[i]; }
};

constexpr int kVocabSize = 384;
constexpr double kThetaScale = 5.0;  // meters-per-radian equivalence in clustering

// Seeded k-means over (dx, dy, theta_scale * dtheta) with the zero
// action forced into row 0. Throws with fewer samples than centers.
KDisksVocab build_vocab(const std::vector<Delta>& samples, uint64_t seed,
                        int k = kVocabSize, int iters = 25);

void save_vocab_csv(const std::string& path, const KDisksVocab& vocab);
KDisksVocab load_vocab_csv(const std::string& path);

// Box-corner alignment tokenization: the index minimizing mean corner
// displacement (ties to the lowest index) plus the exact residual.
struct Tokenized {
    int index = 0;
    Delta residual;
};
Tokenized tokenize_action(const Delta& true_delta, double box_length, double box_width,
                          const KDisksVocab& vocab);

double corner_error(const Delta& a, const Delta& b, double box_length, double box_width);

}  // namespace vw::dsim
