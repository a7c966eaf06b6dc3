#include "vectorworld/deltasim/vocab.hpp"

#include <cmath>
#include <fstream>
#include <tuple>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vw::dsim {

KDisksVocab build_vocab(const std::vector<Delta>& samples, uint64_t seed, int k, int iters) {
    if (static_cast<int>(samples.size()) < k)
        throw std::runtime_error("build_vocab: need at least " + std::to_string(k) + " samples");

    auto key = [](const Delta& d) {
        return std::make_tuple(d.dx, d.dy, d.dtheta);
    };

    // deterministic init: first k distinct samples, then random fills
    std::vector<Delta> centers;
    centers.reserve(k);
    for (const auto& s : samples) {
        bool dup = false;
        for (const auto& c : centers)
            if (key(c) == key(s)) {
                dup = true;
                break;
            }
        if (!dup) centers.push_back(s);
        if (static_cast<int>(centers.size()) == k) break;
    }
    Rng rng(seed);
    while (static_cast<int>(centers.size()) < k) {
        const Delta& s = samples[rng.uniform_int(0, static_cast<int>(samples.size()) - 1)];
        Delta jig = s;
        jig.dx += rng.normal() * 1e-3;
        centers.push_back(jig);
    }

    auto dist2 = [](const Delta& a, const Delta& b) {
        double dt = kThetaScale * (a.dtheta - b.dtheta);
        return (a.dx - b.dx) * (a.dx - b.dx) + (a.dy - b.dy) * (a.dy - b.dy) + dt * dt;
    };

    std::vector<int> assign(samples.size(), 0);
    for (int it = 0; it < iters; ++it) {
        bool moved = false;
        for (size_t i = 0; i < samples.size(); ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::max();
            for (int c = 0; c < k; ++c) {
                double d = dist2(samples[i], centers[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[i] != best) moved = true;
            assign[i] = best;
        }
        std::vector<Delta> sums(k);
        std::vector<int> counts(k, 0);
        for (size_t i = 0; i < samples.size(); ++i) {
            sums[assign[i]].dx += samples[i].dx;
            sums[assign[i]].dy += samples[i].dy;
            sums[assign[i]].dtheta += samples[i].dtheta;
            counts[assign[i]]++;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its center
            centers[c] = {sums[c].dx / counts[c], sums[c].dy / counts[c],
                          sums[c].dtheta / counts[c]};
        }
        if (!moved && it > 0) break;
    }

    // force the zero action onto row 0: snap the center closest to it
    int zi = 0;
    double zd = std::numeric_limits<double>::max();
    Delta zero;
    for (int c = 0; c < k; ++c) {
        double d = dist2(centers[c], zero);
        if (d < zd) {
            zd = d;
            zi = c;
        }
    }
    centers[zi] = zero;
    std::swap(centers[0], centers[zi]);

    KDisksVocab vocab;
    vocab.rows = std::move(centers);
    return vocab;
}

void save_vocab_csv(const std::string& path, const KDisksVocab& vocab) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_vocab_csv: cannot open '" + path + "'");
    os.precision(17);
    os << "dx,dy,dtheta\n";
    for (const auto& d : vocab.rows) os << d.dx << "," << d.dy << "," << d.dtheta << "\n";
}

KDisksVocab load_vocab_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_vocab_csv: cannot open '" + path + "'");
    KDisksVocab vocab;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Delta d;
        char comma;
        ls >> d.dx >> comma >> d.dy >> comma >> d.dtheta;
        vocab.rows.push_back(d);
    }
    return vocab;
}

double corner_error(const Delta& a, const Delta& b, double box_length, double box_width) {
    scene::SE2 ta{a.dx, a.dy, a.dtheta};
    scene::SE2 tb{b.dx, b.dy, b.dtheta};
    double hx = box_length / 2.0, hy = box_width / 2.0;
    scene::Vec2 corners[4] = {{hx, hy}, {hx, -hy}, {-hx, hy}, {-hx, -hy}};
    double err = 0.0;
    for (const auto& c : corners) err += (ta.apply(c) - tb.apply(c)).norm();
    return err / 4.0;
}

Tokenized tokenize_action(const Delta& true_delta, double box_length, double box_width,
                          const KDisksVocab& vocab) {
    if (box_length <= 0.0 || box_width <= 0.0)
        throw std::runtime_error("tokenize_action: box dims must be positive");
    Tokenized out;
    double best = std::numeric_limits<double>::max();
    for (int i = 0; i < vocab.size(); ++i) {
        double e = corner_error(true_delta, vocab[i], box_length, box_width);
        if (e < best) {  // strict: ties keep the lowest index
            best = e;
            out.index = i;
        }
    }
    out.residual = {true_delta.dx - vocab[out.index].dx, true_delta.dy - vocab[out.index].dy,
                    true_delta.dtheta - vocab[out.index].dtheta};
    return out;
}

}  // namespace vw::dsim
