#include "imdp/generators.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

namespace imdp {
namespace {

// up, down, left, right, stay -- the fixed action order.
constexpr int kGridActions = 5;
constexpr int kDx[kGridActions] = {0, 0, -1, 1, 0};
constexpr int kDy[kGridActions] = {-1, 1, 0, 0, 0};

const char* kFourRooms24 =
    "#######\n"
    "#..#..#\n"
    "#.....#\n"
    "##.#.##\n"
    "#..#..#\n"
    "#.....#\n"
    "#..#..#\n"
    "#######\n";

}  // namespace

int GridSpec::free_cells() const {
    int n = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (!is_wall(x, y)) ++n;
    return n;
}

GridSpec GridSpec::parse(const std::string& text, double noise) {
    GridSpec spec;
    spec.noise = noise;
    std::istringstream in(text);
    std::string line;
    int y = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        spec.width = std::max(spec.width, static_cast<int>(line.size()));
        for (int x = 0; x < static_cast<int>(line.size()); ++x) {
            if (line[x] == '#') spec.walls.insert({x, y});
            else if (line[x] != '.')
                throw ModelError("grid map: unexpected character");
        }
        ++y;
    }
    spec.height = y;
    if (spec.free_cells() < 1) throw ModelError("grid map: no free cells");
    if (noise < 0.0 || noise >= 1.0) throw ModelError("grid map: eta not in [0,1)");
    return spec;
}

std::string GridSpec::to_text() const {
    std::string out;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out += is_wall(x, y) ? '#' : '.';
        out += '\n';
    }
    return out;
}

GridSpec fourrooms24(double noise) { return GridSpec::parse(kFourRooms24, noise); }

void PermPair::validate() const {
    if (perm0.size() != perm1.size() || perm0.empty())
        throw ModelError("perm pair: size mismatch");
    const int d = size();
    for (const auto* p : {&perm0, &perm1}) {
        std::vector<bool> seen(d, false);
        for (int v : *p) {
            if (v < 0 || v >= d || seen[v])
                throw ModelError("perm pair: not a permutation");
            seen[v] = true;
        }
    }
}

ControlledMP random_cmp(int d, int k, std::uint64_t seed) {
    if (d < 1 || k < 1) throw ModelError("random_cmp: bad dimensions");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ControlledMP m;
    m.k = k;
    m.d = d;
    m.M.assign(k, Matrix::Zero(d, d));
    for (int a = 0; a < k; ++a)
        for (int s = 0; s < d; ++s)
            for (int t = 0; t < d; ++t) m.M[a](s, t) = unif(rng);
    for (int s = 0; s < d; ++s) {
        double total = 0.0;
        for (int a = 0; a < k; ++a) total += m.M[a].row(s).sum();
        for (int a = 0; a < k; ++a) m.M[a].row(s) /= total;
    }
    return m;
}

ControlledMP gridworld(const GridSpec& spec) {
    return gridworld(spec, Policy::uniform(kGridActions, spec.free_cells()));
}

ControlledMP gridworld(const GridSpec& spec, const Policy& pi) {
    const int d = spec.free_cells();
    if (d < 1) throw ModelError("gridworld: zero free cells");
    pi.validate();
    if (pi.actions() != kGridActions || pi.states() != d)
        throw ModelError("gridworld: policy shape mismatch");

    // State index per free cell, row-major.
    std::vector<std::vector<int>> index(spec.height,
                                        std::vector<int>(spec.width, -1));
    std::vector<std::pair<int, int>> cells;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            if (!spec.is_wall(x, y)) {
                index[y][x] = static_cast<int>(cells.size());
                cells.push_back({x, y});
            }

    // Connectivity check via BFS over the free cells.
    std::vector<bool> visited(d, false);
    std::queue<int> frontier;
    frontier.push(0);
    visited[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        auto [x, y] = cells[frontier.front()];
        frontier.pop();
        for (int a = 0; a < 4; ++a) {
            int nx = x + kDx[a], ny = y + kDy[a];
            if (spec.is_wall(nx, ny)) continue;
            int t = index[ny][nx];
            if (!visited[t]) {
                visited[t] = true;
                ++reached;
                frontier.push(t);
            }
        }
    }
    if (reached != d) throw ModelError("gridworld: free cells not connected");

    std::vector<Matrix> p(kGridActions, Matrix::Zero(d, d));
    const double eta = spec.noise;
    for (int s = 0; s < d; ++s) {
        auto [x, y] = cells[s];
        // Admissible neighbors: distinct outcomes of the five moves.
        std::set<int> neighbors{s};
        for (int a = 0; a < kGridActions; ++a) {
            int nx = x + kDx[a], ny = y + kDy[a];
            if (!spec.is_wall(nx, ny)) neighbors.insert(index[ny][nx]);
        }
        for (int a = 0; a < kGridActions; ++a) {
            int nx = x + kDx[a], ny = y + kDy[a];
            int det = spec.is_wall(nx, ny) ? s : index[ny][nx];
            p[a](s, det) += 1.0 - eta;
            for (int t : neighbors)
                p[a](s, t) += eta / static_cast<double>(neighbors.size());
        }
    }
    return build_cmp(p, pi);
}

GridSpec random_grid(int width, int height, int target_free, double noise,
                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        GridSpec spec;
        spec.width = width;
        spec.height = height;
        spec.noise = noise;
        // Border walls; interior cells are walls with probability 0.25.
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                bool border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if (border || unif(rng) < 0.25) spec.walls.insert({x, y});
            }
        int free = spec.free_cells();
        if (free < 1) continue;
        if (target_free > 0 && free != target_free) continue;
        try {
            gridworld(spec);  // throws if disconnected
        } catch (const ModelError&) {
            continue;
        }
        return spec;
    }
    throw ModelError("random_grid: no admissible grid found");
}

ControlledMP tensor_product(const ControlledMP& mdot, const Matrix& mddot,
                            double tol) {
    const int d2 = static_cast<int>(mddot.rows());
    if (mddot.cols() != d2 || d2 < 1)
        throw ModelError("tensor_product: factor must be square");
    if ((mddot.array() < 0.0).any())
        throw ModelError("tensor_product: negative factor entry");
    for (int s = 0; s < d2; ++s)
        if (std::abs(mddot.row(s).sum() - 1.0) > tol)
            throw ModelError("tensor_product: factor row does not sum to 1");
    ControlledMP m;
    m.k = mdot.k;
    m.d = mdot.d * d2;
    m.M.reserve(m.k);
    for (int a = 0; a < m.k; ++a) {
        Matrix ma(m.d, m.d);
        for (int s1 = 0; s1 < mdot.d; ++s1)
            for (int s2 = 0; s2 < d2; ++s2)
                for (int t1 = 0; t1 < mdot.d; ++t1)
                    for (int t2 = 0; t2 < d2; ++t2)
                        ma(s1 * d2 + s2, t1 * d2 + t2) =
                            mdot.M[a](s1, t1) * mddot(s2, t2);
        m.M.push_back(std::move(ma));
    }
    return m;
}

ControlledMP block_diagonal(const std::vector<ControlledMP>& parts) {
    if (parts.empty()) throw ModelError("block_diagonal: no parts");
    const int k = parts.front().k;
    int d = 0;
    for (const ControlledMP& part : parts) {
        if (part.k != k) throw ModelError("block_diagonal: action count mismatch");
        d += part.d;
    }
    ControlledMP m;
    m.k = k;
    m.d = d;
    m.M.assign(k, Matrix::Zero(d, d));
    int offset = 0;
    for (const ControlledMP& part : parts) {
        for (int a = 0; a < k; ++a)
            m.M[a].block(offset, offset, part.d, part.d) = part.M[a];
        offset += part.d;
    }
    return m;
}

std::pair<ControlledMP, ControlledMP> degenerate_action_independent(
    int d, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto make = [&]() {
        Matrix base(d, d);
        for (int s = 0; s < d; ++s) {
            for (int t = 0; t < d; ++t) base(s, t) = unif(rng);
            base.row(s) /= base.row(s).sum();
        }
        ControlledMP m;
        m.k = k;
        m.d = d;
        m.M.assign(k, base / static_cast<double>(k));
        return m;
    };
    return {make(), make()};
}

ControlledMP perm_cmp(const PermPair& pair, const Policy& pi) {
    pair.validate();
    const int d = pair.size();
    pi.validate();
    if (pi.actions() != 2 || pi.states() != d)
        throw ModelError("perm_cmp: policy shape mismatch");
    ControlledMP m;
    m.k = 2;
    m.d = d;
    m.M.assign(2, Matrix::Zero(d, d));
    for (int s = 0; s < d; ++s) {
        m.M[0](s, pair.perm0[s]) = pi.table(0, s);
        m.M[1](s, pair.perm1[s]) = pi.table(1, s);
    }
    return m;
}

ControlledMP perm_cmp(const PermPair& pair) {
    return perm_cmp(pair, Policy::uniform(2, pair.size()));
}

PermPair perm_pair_six() {
    // One-line notation, 0-based: [456123] and [231645].
    return PermPair{{3, 4, 5, 0, 1, 2}, {1, 2, 0, 5, 3, 4}};
}

PermPair perm_pair_fifteen() {
    // 3-cycles against non-commuting 5-cycles on 15 states.
    return PermPair{
        {5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 0, 1, 2, 3, 4},
        {1, 2, 3, 4, 0, 7, 8, 9, 5, 6, 13, 14, 10, 11, 12}};
}

CycleCondition cycle_condition(const PermPair& pair, int i) {
    pair.validate();
    const int d = pair.size();
    using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
    IntMatrix sum = IntMatrix::Zero(d, d);
    for (int s = 0; s < d; ++s) {
        sum(s, pair.perm0[s]) += 1;
        sum(s, pair.perm1[s]) += 1;
    }
    IntMatrix power = IntMatrix::Identity(d, d);
    CycleCondition result;
    for (int j = 1; j <= i + 1; ++j) {
        power = power * sum;
        if (power.maxCoeff() > 1) {
            result.fails_at = j;
            result.ok = j > i;
            return result;
        }
    }
    result.ok = true;
    return result;
}

std::pair<ControlledMP, ControlledMP> split_counterexample(
    const PermPair& pair, int i, std::uint64_t seed) {
    CycleCondition cond = cycle_condition(pair, i);
    if (!cond.ok)
        throw ModelError("split_counterexample: pair fails the cycle condition "
                         "at power " + std::to_string(cond.fails_at));
    const int d1 = pair.size();
    std::mt19937_64 rng(seed);
    // Entries uniform on (0.1, 0.9) then row-normalized keeps every block
    // strictly positive.
    std::uniform_real_distribution<double> unif(0.1, 0.9);
    auto sample_block = [&]() {
        Eigen::Matrix2d block;
        for (int r = 0; r < 2; ++r) {
            block(r, 0) = unif(rng);
            block(r, 1) = unif(rng);
            block.row(r) /= block.row(r).sum();
        }
        return block;
    };
    auto build = [&](const std::vector<std::vector<Eigen::Matrix2d>>& blocks) {
        ControlledMP m;
        m.k = 2;
        m.d = 2 * d1;
        m.M.assign(2, Matrix::Zero(m.d, m.d));
        const std::vector<int>* perms[2] = {&pair.perm0, &pair.perm1};
        for (int a = 0; a < 2; ++a)
            for (int s1 = 0; s1 < d1; ++s1) {
                int t1 = (*perms[a])[s1];
                m.M[a].block(2 * s1, 2 * t1, 2, 2) =
                    0.5 * blocks[a][s1];  // pi(a|s) = 1/2
            }
        return m;
    };
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<std::vector<Eigen::Matrix2d>> mb(2), wb(2);
        for (int a = 0; a < 2; ++a)
            for (int s = 0; s < d1; ++s) mb[a].push_back(sample_block());
        for (int a = 0; a < 2; ++a)
            for (int s = 0; s < d1; ++s) wb[a].push_back(sample_block());
        ControlledMP m = build(mb), w = build(wb);
        bool good = true;
        for (int j = 1; j <= i && good; ++j)
            good = verify_eqim(m, w, j, EqimMode::sequence).holds();
        if (good &&
            verify_eqim(m, w, i + 1, EqimMode::sequence).status ==
                EqimResult::Status::fails)
            return {m, w};
        // Accidental equality at i+1 has measure zero; resample.
    }
    throw ModelError("split_counterexample: failed to produce a valid pair");
}

MaskedInverseModel add_noise(const MaskedInverseModel& b, double c,
                             std::uint64_t seed) {
    if (std::isinf(c) && c < 0.0) return b;
    const double scale = std::pow(10.0, c);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    MaskedInverseModel noisy = b;
    for (int s = 0; s < b.d; ++s)
        for (int t = 0; t < b.d; ++t) {
            if (!b.defined(s, t)) continue;
            double sum = 0.0;
            for (Matrix& v : noisy.values) {
                v(s, t) += scale * unif(rng);
                sum += v(s, t);
            }
            for (Matrix& v : noisy.values) v(s, t) /= sum;
        }
    return noisy;
}

double kl_divergence(const MaskedInverseModel& b_true,
                     const MaskedInverseModel& b_est) {
    if (b_true.d != b_est.d || b_true.num_slices() != b_est.num_slices())
        throw ModelError("kl_divergence: shape mismatch");
    double total = 0.0;
    int count = 0;
    for (int s = 0; s < b_true.d; ++s)
        for (int t = 0; t < b_true.d; ++t) {
            // jointly defined entries only: where the estimate lost support
            // entirely the conditional is not comparable
            if (!b_true.defined(s, t) || !b_est.defined(s, t)) continue;
            double kl = 0.0;
            for (int q = 0; q < b_true.num_slices(); ++q) {
                double p = b_true.values[q](s, t);
                if (p <= 0.0) continue;  // 0 log 0 = 0
                double q_est = std::max(b_est.values[q](s, t), 1e-300);
                kl += p * std::log(p / q_est);
            }
            total += kl;
            ++count;
        }
    return count > 0 ? total / count : 0.0;
}

}  // namespace imdp
