#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lfrid/errors.hpp"
#include "lfrid/lm.hpp"
#include "lfrid/lti.hpp"
#include "lfrid/nllfr.hpp"
#include "lfrid/signals.hpp"

namespace lfrid {

using json = nlohmann::json;

namespace detail {

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    // row-major flat array; dimensions travel alongside in the owning object
    json arr = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
    return arr;
}

inline Eigen::MatrixXd matrix_from_json(const json& arr, Eigen::Index rows, Eigen::Index cols) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
        throw IoError("matrix array has wrong length");
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[i++].get<double>();
    return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace detail

// --- SignalRecord: CSV data file plus JSON side-car with the metadata ------

/// Writes <base>.csv (header row u1,..,y1,.., one column per channel, full
/// double precision) and <base>.json carrying fs, periodicity and excitation.
inline void save_record(const SignalRecord& rec, const std::filesystem::path& base) {
    rec.validate();
    std::ostringstream csv;
    csv.precision(17);
    for (Eigen::Index c = 0; c < rec.n_inputs(); ++c) csv << (c ? "," : "") << "u" << (c + 1);
    for (Eigen::Index c = 0; c < rec.n_outputs(); ++c) csv << ",y" << (c + 1);
    csv << "\n";
    for (Eigen::Index k = 0; k < rec.n_samples(); ++k) {
        for (Eigen::Index c = 0; c < rec.n_inputs(); ++c) csv << (c ? "," : "") << rec.u(k, c);
        for (Eigen::Index c = 0; c < rec.n_outputs(); ++c) csv << "," << rec.y(k, c);
        csv << "\n";
    }
    detail::write_text(base.string() + ".csv", csv.str());

    json meta;
    meta["fs"] = rec.fs;
    meta["n_periods"] = rec.n_periods;
    meta["excitation"] = to_string(rec.excitation);
    meta["n_u"] = rec.n_inputs();
    meta["n_y"] = rec.n_outputs();
    detail::write_text(base.string() + ".json", meta.dump(2) + "\n");
}

inline SignalRecord load_record(const std::filesystem::path& base) {
    const json meta = json::parse(detail::read_text(base.string() + ".json"));
    const Eigen::Index n_u = meta.at("n_u").get<Eigen::Index>();
    const Eigen::Index n_y = meta.at("n_y").get<Eigen::Index>();

    std::ifstream f(base.string() + ".csv");
    if (!f) throw IoError("cannot open " + base.string() + ".csv");
    std::string line;
    if (!std::getline(f, line)) throw IoError("empty csv " + base.string() + ".csv");
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<Eigen::Index>(row.size()) != n_u + n_y)
            throw IoError("csv row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(n_u + n_y));
        rows.push_back(std::move(row));
    }

    SignalRecord rec;
    rec.u.resize(static_cast<Eigen::Index>(rows.size()), n_u);
    rec.y.resize(static_cast<Eigen::Index>(rows.size()), n_y);
    for (Eigen::Index k = 0; k < rec.u.rows(); ++k) {
        for (Eigen::Index c = 0; c < n_u; ++c) rec.u(k, c) = rows[k][c];
        for (Eigen::Index c = 0; c < n_y; ++c) rec.y(k, c) = rows[k][n_u + c];
    }
    rec.fs = meta.at("fs").get<double>();
    rec.n_periods = meta.at("n_periods").get<int>();
    rec.excitation = excitation_from_string(meta.at("excitation").get<std::string>());
    rec.validate();
    return rec;
}

// --- LtiStateSpace ----------------------------------------------------------

inline json to_json(const LtiStateSpace& ss) {
    json j;
    j["n_x"] = ss.n_states();
    j["n_u"] = ss.n_inputs();
    j["n_y"] = ss.n_outputs();
    j["A"] = detail::matrix_to_json(ss.A);
    j["B"] = detail::matrix_to_json(ss.B);
    j["C"] = detail::matrix_to_json(ss.C);
    j["D"] = detail::matrix_to_json(ss.D);
    return j;
}

inline LtiStateSpace lti_from_json(const json& j) {
    const auto nx = j.at("n_x").get<Eigen::Index>();
    const auto nu = j.at("n_u").get<Eigen::Index>();
    const auto ny = j.at("n_y").get<Eigen::Index>();
    LtiStateSpace ss;
    ss.A = detail::matrix_from_json(j.at("A"), nx, nx);
    ss.B = detail::matrix_from_json(j.at("B"), nx, nu);
    ss.C = detail::matrix_from_json(j.at("C"), ny, nx);
    ss.D = detail::matrix_from_json(j.at("D"), ny, nu);
    ss.validate();
    return ss;
}

// --- NlLfrModel (versioned format) -----------------------------------------

inline constexpr int k_model_format_version = 1;

inline json to_json(const NlLfrModel& m) {
    json j;
    j["format_version"] = k_model_format_version;
    j["dims"] = {{"n_x", m.n_states()}, {"n_u", m.n_inputs()}, {"n_y", m.n_outputs()},
                 {"n_z", m.n_z()},      {"n_w", m.n_w()},      {"n_n", m.net.n_neurons()}};
    j["activation"] = to_string(m.net.activation);
    j["A"] = detail::matrix_to_json(m.A);
    j["B_u"] = detail::matrix_to_json(m.B_u);
    j["B_w"] = detail::matrix_to_json(m.B_w);
    j["C_z"] = detail::matrix_to_json(m.C_z);
    j["C_y"] = detail::matrix_to_json(m.C_y);
    j["D_zu"] = detail::matrix_to_json(m.D_zu);
    j["D_yu"] = detail::matrix_to_json(m.D_yu);
    j["D_yw"] = detail::matrix_to_json(m.D_yw);
    j["W_z"] = detail::matrix_to_json(m.net.W_z);
    j["b_z"] = detail::matrix_to_json(m.net.b_z);
    j["W_w"] = detail::matrix_to_json(m.net.W_w);
    j["b_w"] = detail::matrix_to_json(m.net.b_w);
    return j;
}

inline NlLfrModel nllfr_from_json(const json& j) {
    if (j.at("format_version").get<int>() != k_model_format_version)
        throw IoError("unsupported model format version");
    const json& d = j.at("dims");
    const auto nx = d.at("n_x").get<Eigen::Index>();
    const auto nu = d.at("n_u").get<Eigen::Index>();
    const auto ny = d.at("n_y").get<Eigen::Index>();
    const auto nz = d.at("n_z").get<Eigen::Index>();
    const auto nw = d.at("n_w").get<Eigen::Index>();
    const auto nn = d.at("n_n").get<Eigen::Index>();
    NlLfrModel m;
    m.A = detail::matrix_from_json(j.at("A"), nx, nx);
    m.B_u = detail::matrix_from_json(j.at("B_u"), nx, nu);
    m.B_w = detail::matrix_from_json(j.at("B_w"), nx, nw);
    m.C_z = detail::matrix_from_json(j.at("C_z"), nz, nx);
    m.C_y = detail::matrix_from_json(j.at("C_y"), ny, nx);
    m.D_zu = detail::matrix_from_json(j.at("D_zu"), nz, nu);
    m.D_yu = detail::matrix_from_json(j.at("D_yu"), ny, nu);
    m.D_yw = detail::matrix_from_json(j.at("D_yw"), ny, nw);
    m.net.W_z = detail::matrix_from_json(j.at("W_z"), nn, nz);
    m.net.b_z = detail::matrix_from_json(j.at("b_z"), nn, 1);
    m.net.W_w = detail::matrix_from_json(j.at("W_w"), nw, nn);
    m.net.b_w = detail::matrix_from_json(j.at("b_w"), nw, 1);
    m.net.activation = activation_from_string(j.at("activation").get<std::string>());
    m.validate();
    return m;
}

// --- FitReport ---------------------------------------------------------------

inline json to_json(const FitReport& r) {
    json j;
    j["initial_cost"] = r.initial_cost;
    j["final_cost"] = r.final_cost;
    j["termination"] = to_string(r.termination);
    j["seed"] = r.seed;
    j["failed_trials"] = r.failed_trials;
    j["accepted_steps"] = r.accepted_steps();
    json iters = json::array();
    for (const auto& it : r.iterations)
        iters.push_back({{"iter", it.iter},
                         {"cost", it.cost},
                         {"trial_cost", it.trial_cost},
                         {"lambda", it.lambda},
                         {"step_norm", it.step_norm},
                         {"rank", it.rank},
                         {"accepted", it.accepted}});
    j["iterations"] = std::move(iters);
    json th = json::array();
    for (Eigen::Index i = 0; i < r.theta.size(); ++i) th.push_back(r.theta(i));
    j["theta"] = std::move(th);
    return j;
}

/// Cost trace as tidy CSV for plotting.
inline void save_cost_trace(const FitReport& r, const std::filesystem::path& path) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "iter,cost,trial_cost,lambda,step_norm,rank,accepted\n";
    for (const auto& it : r.iterations)
        csv << it.iter << "," << it.cost << "," << it.trial_cost << "," << it.lambda << ","
            << it.step_norm << "," << it.rank << "," << (it.accepted ? 1 : 0) << "\n";
    detail::write_text(path, csv.str());
}

inline void save_json(const json& j, const std::filesystem::path& path) {
    detail::write_text(path, j.dump(2) + "\n");
}

inline json load_json(const std::filesystem::path& path) {
    return json::parse(detail::read_text(path));
}

} // namespace lfrid
