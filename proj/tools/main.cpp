// Command-line front end: reproducible experiments over the imdp library.
// Exit codes: 0 success, 2 inconsistent inputs, 3 may-not-be-unique,
// 4 parse/shape errors.

#include "imdp/analysis.hpp"
#include "imdp/generators.hpp"
#include "imdp/json_io.hpp"
#include "imdp/model.hpp"
#include "imdp/planner.hpp"
#include "imdp/sat_reduction.hpp"
#include "imdp/solver_linear.hpp"
#include "imdp/solver_relaxation.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace imdp;

constexpr int kExitOk = 0;
constexpr int kExitInconsistent = 2;
constexpr int kExitNonUnique = 3;
constexpr int kExitParse = 4;

// Counter-based seed expansion: every sub-experiment derives its RNG stream
// from the top-level --seed and its cell coordinates.
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(seed ^ 0x243F6A8885A308D3ULL) ^
                      splitmix64(a * 2 + 1) ^ splitmix64((b + 1) << 32));
}

struct Report {
    Json j;
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();

    explicit Report(const std::string& command) {
        j["command"] = command;
        j["config"] = Json::object();
        j["metrics"] = Json::object();
    }
    void emit() {
        j["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        std::cout << j.dump(2) << std::endl;
    }
};

MaskedInverseModel load_inverse(const std::string& path) {
    return inverse_from_json(load_json(path));
}

double support_density(const ControlledMP& m) {
    int nz = 0;
    for (const Matrix& ma : m.M) nz += (ma.array() > 0.0).count();
    return static_cast<double>(nz) / (m.k * m.d * m.d);
}

// ---------------------------------------------------------------- gen

int cmd_gen(const std::string& kind, int d, int k, int width, int height,
            int free_cells, double noise, int horizon, std::uint64_t seed,
            const std::string& out, const std::string& out2) {
    Report rep("gen");
    rep.j["config"] = {{"kind", kind},   {"d", d},          {"k", k},
                       {"width", width}, {"height", height}, {"free", free_cells},
                       {"noise", noise}, {"i", horizon},     {"seed", seed},
                       {"out", out},     {"out2", out2}};
    ControlledMP m;
    if (kind == "random") {
        m = random_cmp(d, k, seed);
    } else if (kind == "grid") {
        GridSpec spec = random_grid(width, height, free_cells, noise, seed);
        m = gridworld(spec);
        rep.j["metrics"]["map"] = spec.to_text();
    } else if (kind == "fourrooms24") {
        m = gridworld(fourrooms24(noise));
    } else if (kind == "tensor") {
        Matrix exo = Matrix::Constant(2, 2, 0.5);
        m = tensor_product(random_cmp(d / 2, k, seed), exo);
    } else if (kind == "perm-counterexample") {
        PermPair pair = horizon >= 3 ? perm_pair_fifteen() : perm_pair_six();
        auto [mm, ww] = split_counterexample(pair, horizon, seed);
        m = mm;
        if (out2.empty())
            throw ModelError("gen perm-counterexample needs --out2 for W");
        save_json(out2, to_json(ww));
    } else if (kind == "degenerate") {
        auto [mm, ww] = degenerate_action_independent(d, k, seed);
        m = mm;
        if (out2.empty())
            throw ModelError("gen degenerate needs --out2 for the second model");
        save_json(out2, to_json(ww));
    } else {
        throw ModelError("gen: unknown kind " + kind);
    }
    save_json(out, to_json(m));
    rep.j["metrics"]["d"] = m.d;
    rep.j["metrics"]["k"] = m.k;
    rep.j["metrics"]["support_density"] = support_density(m);
    rep.emit();
    return kExitOk;
}

// ---------------------------------------------------------------- invert

int cmd_invert(const std::string& model_path, const std::vector<int>& orders,
               const std::vector<int>& fa_horizons, const std::string& out) {
    Report rep("invert");
    rep.j["config"] = {{"model", model_path},
                       {"orders", orders},
                       {"first_action_horizons", fa_horizons},
                       {"out", out}};
    ControlledMP m = cmp_from_json(load_json(model_path));
    Json written = Json::array();
    for (int n : orders) {
        MaskedInverseModel b = sequence_inverse_model(m, n);
        std::string path = out + ".seq" + std::to_string(n) + ".json";
        save_json(path, to_json(b));
        written.push_back(path);
    }
    for (int h : fa_horizons) {
        MaskedInverseModel b = first_action_inverse(m, h);
        std::string path = out + ".fa" + std::to_string(h) + ".json";
        save_json(path, to_json(b));
        written.push_back(path);
    }
    rep.j["metrics"]["files"] = written;
    rep.emit();
    return kExitOk;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const std::string& method, const std::string& model_path,
              const std::string& b1_path, const std::string& bprev_path,
              const std::string& bcur_path, const std::string& pi_path,
              int horizon, const std::string& states, bool noisy, double tol,
              std::uint64_t seed, const std::string& out) {
    Report rep("solve");
    rep.j["config"] = {{"method", method},   {"model", model_path},
                       {"b1", b1_path},      {"b_prev", bprev_path},
                       {"b_cur", bcur_path}, {"policy", pi_path},
                       {"i", horizon},       {"states", states},
                       {"noisy", noisy},     {"tol", tol},
                       {"seed", seed},       {"out", out}};
    MaskedInverseModel b1;
    Policy pi;
    ControlledMP truth;
    bool have_truth = false;
    if (!model_path.empty()) {
        truth = cmp_from_json(load_json(model_path));
        have_truth = true;
        b1 = one_step_inverse(truth);
        pi = truth.policy();
    } else {
        b1 = load_inverse(b1_path);
        pi = policy_from_json(load_json(pi_path));
    }

    if (method == "linear") {
        LinearSolverOptions opts;
        opts.seed = seed;
        SolutionSet sol = infer_forward(b1, pi, opts);
        rep.j["metrics"]["residual"] = sol.residual;
        rep.j["metrics"]["d_J"] = sol.total_dim();
        if (!out.empty()) save_json(out, to_json(sol));
        if (have_truth && sol.status != SolutionSet::Status::inconsistent) {
            double err = 0.0;
            for (int a = 0; a < truth.k; ++a)
                err = std::max(err, (sol.particular_w[a] - truth.M[a])
                                        .cwiseAbs()
                                        .maxCoeff());
            rep.j["metrics"]["max_abs_error"] = err;
        }
        rep.emit();
        if (sol.status == SolutionSet::Status::inconsistent)
            return kExitInconsistent;
        if (sol.status == SolutionSet::Status::affine) return kExitNonUnique;
        return kExitOk;
    }
    if (method != "relaxation") throw ModelError("solve: unknown method");

    RelaxationInputs in;
    in.i = horizon;
    in.b1 = b1;
    in.pi = pi;
    if (have_truth) {
        in.b_prev = horizon == 2 ? b1 : sequence_inverse_model(truth, horizon - 1);
        in.b_cur = sequence_inverse_model(truth, horizon);
    } else {
        in.b_prev = load_inverse(bprev_path);
        in.b_cur = load_inverse(bcur_path);
    }
    RelaxationOptions opts;
    opts.seed = seed;
    if (states == "one") opts.states_to_use = RelaxationStates::one;
    else if (states == "random") opts.states_to_use = RelaxationStates::random_projections;
    else opts.states_to_use = RelaxationStates::all;
    if (noisy) {
        opts.null_accept_rel = 1.0;
        opts.k_residual_tol = 1e12;
        opts.cross_check_tol = 1e12;
    }
    RelaxationVerdict v = solve_relaxation(in, opts);
    rep.j["metrics"]["flags"] = Json::array();
    for (const std::string& f : v.flags) rep.j["metrics"]["flags"].push_back(f);
    rep.j["metrics"]["cross_check_error"] = v.diagnostics.cross_check_error;
    if (!out.empty()) save_json(out, to_json(v));
    if (have_truth && v.has_w) {
        double err = 0.0;
        for (int a = 0; a < truth.k; ++a)
            err = std::max(err,
                           (v.w.M[a] - truth.M[a]).cwiseAbs().maxCoeff());
        rep.j["metrics"]["max_abs_error"] = err;
    }
    rep.emit();
    if (v.inconsistent()) return kExitInconsistent;
    if (v.may_not_be_unique()) return kExitNonUnique;
    return kExitOk;
}

// ---------------------------------------------------------------- noise-sweep

int cmd_noise_sweep(int width, int height, double eta, int grids,
                    std::vector<double> c_levels, int horizon,
                    std::uint64_t seed, const std::string& out) {
    Report rep("noise-sweep");
    if (c_levels.empty())
        for (int c = -7; c <= 0; ++c) c_levels.push_back(c);
    rep.j["config"] = {{"width", width}, {"height", height}, {"eta", eta},
                       {"grids", grids}, {"c", c_levels},    {"i", horizon},
                       {"seed", seed},   {"out", out}};
    std::ostringstream csv;
    csv << "c,seed,horizon,kl\n";
    for (size_t ci = 0; ci < c_levels.size(); ++ci) {
        const double c = c_levels[ci];
        for (int g = 0; g < grids; ++g) {
            std::uint64_t cell = sub_seed(seed, ci, g);
            GridSpec spec = random_grid(width, height, 0, eta,
                                        sub_seed(seed, 1000 + g));
            ControlledMP m = gridworld(spec);
            RelaxationInputs in;
            in.i = horizon;
            in.b1 = add_noise(one_step_inverse(m), c, splitmix64(cell));
            in.b_prev = horizon == 2
                            ? in.b1
                            : add_noise(sequence_inverse_model(m, horizon - 1),
                                        c, splitmix64(cell + 1));
            in.b_cur = add_noise(sequence_inverse_model(m, horizon), c,
                                 splitmix64(cell + 2));
            in.pi = m.policy();
            RelaxationOptions opts;
            opts.null_accept_rel = 1.0;
            opts.k_residual_tol = 1e12;
            opts.cross_check_tol = 1e12;
            opts.seed = cell;
            RelaxationVerdict v = solve_relaxation(in, opts);
            if (!v.has_w) throw ModelError("noise-sweep: recovery failed");
            for (int h = 1; h <= 3; ++h) {
                double kl = kl_divergence(first_action_inverse(m, h),
                                          first_action_inverse(v.w, h));
                csv << c << ',' << g << ',' << h << ',' << kl << '\n';
            }
        }
    }
    save_text(out, csv.str());
    rep.j["metrics"]["rows"] =
        static_cast<int>(c_levels.size()) * grids * 3;
    rep.emit();
    return kExitOk;
}

// ---------------------------------------------------------------- dims-sweep

int cmd_dims_sweep(int d_min, int d_max, int step, int k, double threshold,
                   std::uint64_t seed, const std::string& out) {
    Report rep("dims-sweep");
    rep.j["config"] = {{"d_min", d_min}, {"d_max", d_max}, {"step", step},
                       {"k", k},         {"threshold", threshold},
                       {"seed", seed},   {"out", out}};
    std::ostringstream csv;
    csv << "d,k,d_J,d_W,d_B,threshold\n";
    for (int d = d_min; d <= d_max; d += step) {
        Matrix exo = Matrix::Constant(2, 2, 0.5);
        ControlledMP m =
            tensor_product(random_cmp(d / 2, k, sub_seed(seed, d)), exo);
        AnalysisOptions opts;
        opts.abs_threshold = threshold;
        DimReport dims = solution_dims(one_step_inverse(m), m.policy(), opts);
        csv << d << ',' << k << ',' << dims.d_j << ',' << dims.d_w << ','
            << dims.d_b << ',' << threshold << '\n';
    }
    save_text(out, csv.str());
    rep.emit();
    return kExitOk;
}

// ---------------------------------------------------------------- satred

int cmd_satred(const std::string& formula_path, const std::string& mode,
               const std::string& w_path, const std::string& out) {
    Report rep("satred");
    rep.j["config"] = {{"formula", formula_path}, {"mode", mode},
                       {"w", w_path},             {"out", out}};
    Cnf1in3 cnf = Cnf1in3::parse(load_text(formula_path));
    SatEncoding enc = encode(pad_clauses(cnf));
    if (mode == "encode") {
        Json j = {{"d", enc.d},
                  {"n", enc.n},
                  {"dummies", enc.dummies},
                  {"A", matrix_to_json(enc.a)},
                  {"B", matrix_to_json(enc.b)},
                  {"C", matrix_to_json(enc.c)},
                  {"Pi", matrix_to_json(enc.pi)},
                  {"columns", enc.column_roles}};
        if (!out.empty()) save_json(out, j);
        rep.j["metrics"]["d"] = enc.d;
        rep.emit();
        return kExitOk;
    }
    if (mode == "verify") {
        Matrix w = matrix_from_json(load_json(w_path));
        SatVerifyResult res = verify(enc, w);
        rep.j["metrics"] = {{"ok", res.ok},
                            {"quad_residual", res.quad_residual},
                            {"row_residual", res.row_residual},
                            {"perm_residual", res.perm_residual},
                            {"worst_row", res.worst_row}};
        SatDecodeResult dec = decode_if_boolean(enc, w);
        rep.j["metrics"]["boolean"] = dec.boolean;
        rep.j["metrics"]["decoded"] = dec.verified;
        rep.emit();
        return res.ok ? kExitOk : kExitInconsistent;
    }
    if (mode != "roundtrip") throw ModelError("satred: unknown mode");

    auto oracle = brute_force(cnf);
    bool any_w = false;
    for (std::uint32_t mask = 0; mask < (1u << cnf.n); ++mask) {
        std::vector<bool> assignment(cnf.n);
        for (int j = 0; j < cnf.n; ++j) assignment[j] = (mask >> j) & 1u;
        if (verify(enc, assignment_to_W(enc, assignment)).ok) {
            any_w = true;
            break;
        }
    }
    bool match = oracle.has_value() == any_w;
    rep.j["metrics"] = {{"satisfiable", oracle.has_value()},
                        {"witness_W_found", any_w},
                        {"biconditional_holds", match}};
    rep.emit();
    return match ? kExitOk : 1;
}

// ---------------------------------------------------------------- plan/dims

int cmd_plan(const std::string& model_path, int s, int goal, int max_i) {
    Report rep("plan");
    rep.j["config"] = {{"model", model_path}, {"s", s}, {"goal", goal},
                       {"max_i", max_i}};
    ControlledMP m = cmp_from_json(load_json(model_path));
    SupportGraph g = support_graph(one_step_inverse(m));
    auto seq = shortest_plan(g, s, goal, max_i);
    if (seq) {
        rep.j["metrics"]["plan"] = *seq;
        rep.j["metrics"]["length"] = static_cast<int>(seq->size());
    } else {
        rep.j["metrics"]["plan"] = nullptr;
        std::cerr << "unreachable within " << max_i << '\n';
    }
    rep.emit();
    return kExitOk;
}

int cmd_dims(const std::string& model_path, const std::string& b1_path,
             const std::string& pi_path, double threshold) {
    Report rep("dims");
    rep.j["config"] = {{"model", model_path},
                       {"b1", b1_path},
                       {"policy", pi_path},
                       {"threshold", threshold}};
    MaskedInverseModel b1;
    Policy pi;
    if (!model_path.empty()) {
        ControlledMP m = cmp_from_json(load_json(model_path));
        b1 = one_step_inverse(m);
        pi = m.policy();
    } else {
        b1 = load_inverse(b1_path);
        pi = policy_from_json(load_json(pi_path));
    }
    AnalysisOptions opts;
    opts.abs_threshold = threshold;
    DimReport dims = solution_dims(b1, pi, opts);
    rep.j["metrics"] = {{"d_J", dims.d_j}, {"d_W", dims.d_w},
                        {"d_B", dims.d_b}, {"d_Js", dims.d_js},
                        {"d_Ws", dims.d_ws}};
    rep.emit();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"inverse-model toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    double tol = 1e-9;
    double threshold = 1e-13;

    // gen
    auto* gen = app.add_subcommand("gen", "generate a model");
    std::string gen_kind = "random", gen_out = "model.json", gen_out2;
    int gen_d = 4, gen_k = 2, gen_w = 6, gen_h = 6, gen_free = 0, gen_i = 2;
    double gen_noise = 0.0;
    gen->add_option("--kind", gen_kind);
    gen->add_option("--d", gen_d);
    gen->add_option("--k", gen_k);
    gen->add_option("--width", gen_w);
    gen->add_option("--height", gen_h);
    gen->add_option("--free", gen_free);
    gen->add_option("--noise", gen_noise);
    gen->add_option("--i", gen_i);
    gen->add_option("--seed", seed);
    gen->add_option("--out", gen_out);
    gen->add_option("--out2", gen_out2);

    // invert
    auto* invert = app.add_subcommand("invert", "compute inverse models");
    std::string inv_model, inv_out = "b";
    std::vector<int> inv_orders, inv_fa;
    invert->add_option("--model", inv_model)->required();
    invert->add_option("--orders", inv_orders)->delimiter(',');
    invert->add_option("--first-action", inv_fa)->delimiter(',');
    invert->add_option("--out", inv_out);

    // solve
    auto* solve = app.add_subcommand("solve", "infer W from inverse models");
    std::string so_method = "linear", so_model, so_b1, so_bprev, so_bcur,
                so_pi, so_states = "all", so_out;
    int so_i = 2;
    bool so_noisy = false;
    solve->add_option("--method", so_method);
    solve->add_option("--model", so_model);
    solve->add_option("--b1", so_b1);
    solve->add_option("--b-prev", so_bprev);
    solve->add_option("--b-cur", so_bcur);
    solve->add_option("--policy", so_pi);
    solve->add_option("--i", so_i);
    solve->add_option("--states", so_states);
    solve->add_flag("--noisy", so_noisy);
    solve->add_option("--tol", tol);
    solve->add_option("--seed", seed);
    solve->add_option("--out", so_out);

    // noise-sweep
    auto* nsweep = app.add_subcommand("noise-sweep", "Figure-2-style sweep");
    int ns_w = 6, ns_h = 6, ns_grids = 10, ns_i = 2;
    double ns_eta = 0.2;
    std::vector<double> ns_c;
    std::string ns_out = "noise_sweep.csv";
    nsweep->add_option("--width", ns_w);
    nsweep->add_option("--height", ns_h);
    nsweep->add_option("--eta", ns_eta);
    nsweep->add_option("--grids", ns_grids);
    nsweep->add_option("--c", ns_c)->delimiter(',');
    nsweep->add_option("--i", ns_i);
    nsweep->add_option("--seed", seed);
    nsweep->add_option("--out", ns_out);

    // dims-sweep
    auto* dsweep = app.add_subcommand("dims-sweep", "Figure-3-style sweep");
    int ds_min = 2, ds_max = 32, ds_step = 2, ds_k = 5;
    std::string ds_out = "dims_sweep.csv";
    dsweep->add_option("--d-min", ds_min);
    dsweep->add_option("--d-max", ds_max);
    dsweep->add_option("--step", ds_step);
    dsweep->add_option("--k", ds_k);
    dsweep->add_option("--threshold", threshold);
    dsweep->add_option("--seed", seed);
    dsweep->add_option("--out", ds_out);

    // satred
    auto* satred = app.add_subcommand("satred", "1in3SAT reduction");
    std::string sr_formula, sr_mode = "roundtrip", sr_w, sr_out;
    satred->add_option("--formula", sr_formula)->required();
    satred->add_option("--mode", sr_mode);
    satred->add_option("--w", sr_w);
    satred->add_option("--out", sr_out);

    // plan
    auto* plan = app.add_subcommand("plan", "support-graph planning");
    std::string pl_model;
    int pl_s = 0, pl_goal = 0, pl_max = 10;
    plan->add_option("--model", pl_model)->required();
    plan->add_option("--s", pl_s)->required();
    plan->add_option("--goal", pl_goal)->required();
    plan->add_option("--max-i", pl_max);

    // dims
    auto* dims = app.add_subcommand("dims", "solution-space dimensions");
    std::string dm_model, dm_b1, dm_pi;
    dims->add_option("--model", dm_model);
    dims->add_option("--b1", dm_b1);
    dims->add_option("--policy", dm_pi);
    dims->add_option("--threshold", threshold);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(gen_kind, gen_d, gen_k, gen_w, gen_h, gen_free,
                           gen_noise, gen_i, seed, gen_out, gen_out2);
        if (invert->parsed())
            return cmd_invert(inv_model, inv_orders, inv_fa, inv_out);
        if (solve->parsed())
            return cmd_solve(so_method, so_model, so_b1, so_bprev, so_bcur,
                             so_pi, so_i, so_states, so_noisy, tol, seed,
                             so_out);
        if (nsweep->parsed())
            return cmd_noise_sweep(ns_w, ns_h, ns_eta, ns_grids, ns_c, ns_i,
                                   seed, ns_out);
        if (dsweep->parsed())
            return cmd_dims_sweep(ds_min, ds_max, ds_step, ds_k, threshold,
                                  seed, ds_out);
        if (satred->parsed()) return cmd_satred(sr_formula, sr_mode, sr_w, sr_out);
        if (plan->parsed()) return cmd_plan(pl_model, pl_s, pl_goal, pl_max);
        if (dims->parsed()) return cmd_dims(dm_model, dm_b1, dm_pi, threshold);
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    }
    return kExitOk;
}
