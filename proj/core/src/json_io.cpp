#include "imdp/json_io.hpp"

#include <fstream>
#include <sstream>

namespace imdp {
namespace {

Matrix matrix_from(const Json& j, int rows, int cols, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw ModelError(std::string("json: bad row count in ") + what);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const Json& row = j[r];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw ModelError(std::string("json: bad column count in ") + what);
        for (int c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
    }
    return m;
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (int r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

int get_dim(const Json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw ModelError(std::string("json: missing integer field ") + key);
    int v = j[key].get<int>();
    if (v < 1) throw ModelError(std::string("json: non-positive ") + key);
    return v;
}

}  // namespace

Json matrix_to_json(const Matrix& m) { return matrix_json(m); }

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ModelError("json: expected a 2-d array");
    return matrix_from(j, static_cast<int>(j.size()),
                       static_cast<int>(j[0].size()), "matrix");
}

Json to_json(const ControlledMP& m) {
    Json j;
    j["k"] = m.k;
    j["d"] = m.d;
    Json slices = Json::array();
    for (const Matrix& ma : m.M) slices.push_back(matrix_json(ma));
    j["M"] = std::move(slices);
    return j;
}

ControlledMP cmp_from_json(const Json& j) {
    ControlledMP m;
    m.k = get_dim(j, "k");
    m.d = get_dim(j, "d");
    if (!j.contains("M") || !j["M"].is_array() ||
        static_cast<int>(j["M"].size()) != m.k)
        throw ModelError("json: M must hold k slices");
    for (int a = 0; a < m.k; ++a)
        m.M.push_back(matrix_from(j["M"][a], m.d, m.d, "M"));
    m.validate(1e-9);
    return m;
}

Json to_json(const MaskedInverseModel& b) {
    Json j;
    j["k"] = b.k;
    j["d"] = b.d;
    j["order"] = b.order;
    j["horizon"] = b.horizon;
    j["first_action"] = b.first_action;
    Json slices = Json::array();
    for (const Matrix& v : b.values) slices.push_back(matrix_json(v));
    j["M"] = std::move(slices);
    Json mask = Json::array();
    for (int s = 0; s < b.d; ++s) {
        Json row = Json::array();
        for (int t = 0; t < b.d; ++t) row.push_back(static_cast<bool>(b.defined(s, t)));
        mask.push_back(std::move(row));
    }
    j["defined"] = std::move(mask);
    return j;
}

MaskedInverseModel inverse_from_json(const Json& j) {
    MaskedInverseModel b;
    b.k = get_dim(j, "k");
    b.d = get_dim(j, "d");
    b.order = j.value("order", 1);
    b.horizon = j.value("horizon", b.order);
    b.first_action = j.value("first_action", false);
    if (!j.contains("M") || !j["M"].is_array())
        throw ModelError("json: inverse model needs M slices");
    for (const Json& slice : j["M"])
        b.values.push_back(matrix_from(slice, b.d, b.d, "M"));
    if (!j.contains("defined"))
        throw ModelError("json: inverse model needs a defined mask");
    b.defined = BoolMatrix(b.d, b.d);
    const Json& mask = j["defined"];
    if (!mask.is_array() || static_cast<int>(mask.size()) != b.d)
        throw ModelError("json: bad defined mask shape");
    for (int s = 0; s < b.d; ++s)
        for (int t = 0; t < b.d; ++t) b.defined(s, t) = mask[s][t].get<bool>();
    b.validate(1e-6);
    return b;
}

Json to_json(const Policy& pi) {
    Json j;
    j["k"] = pi.actions();
    j["d"] = pi.states();
    j["table"] = matrix_json(pi.table);
    return j;
}

Policy policy_from_json(const Json& j) {
    int k = get_dim(j, "k");
    int d = get_dim(j, "d");
    if (!j.contains("table")) throw ModelError("json: policy needs a table");
    Policy pi{matrix_from(j["table"], k, d, "table")};
    pi.validate(1e-9);
    return pi;
}

Json to_json(const SolutionSet& sol) {
    Json j;
    switch (sol.status) {
        case SolutionSet::Status::unique: j["status"] = "unique"; break;
        case SolutionSet::Status::affine: j["status"] = "affine"; break;
        case SolutionSet::Status::inconsistent: j["status"] = "inconsistent"; break;
    }
    j["residual"] = sol.residual;
    j["J"] = matrix_json(sol.j);
    Json w = Json::array();
    for (const Matrix& wa : sol.particular_w) w.push_back(matrix_json(wa));
    j["W"] = std::move(w);
    j["dims_per_state"] = sol.dims_per_state;
    Json dirs = Json::array();
    for (const NullDirection& dir : sol.nullspace) {
        Json e;
        e["state"] = dir.state;
        Json row = Json::array();
        for (int t = 0; t < dir.row.size(); ++t) row.push_back(dir.row(t));
        e["row"] = std::move(row);
        dirs.push_back(std::move(e));
    }
    j["nullspace"] = std::move(dirs);
    return j;
}

Json to_json(const RelaxationVerdict& v) {
    Json j;
    j["flags"] = Json::array();
    for (const std::string& f : v.flags) j["flags"].push_back(f);
    if (v.has_w) j["W"] = to_json(v.w)["M"];
    j["diagnostics"] = {
        {"k_power_insufficient", v.diagnostics.k_power_insufficient},
        {"c_ranks", v.diagnostics.c_ranks},
        {"null_residuals", v.diagnostics.null_residuals},
        {"k_residuals", v.diagnostics.k_residuals},
        {"cross_check_error", v.diagnostics.cross_check_error},
        {"cross_source_spread", v.diagnostics.cross_source_spread},
    };
    return j;
}

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        throw ModelError("parse error in " + path + ": " + e.what());
    }
    return j;
}

void save_json(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::string load_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write " + path);
    out << text;
}

}  // namespace imdp
