#include "rsam/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "rsam/errors.hpp"

namespace rsam {

std::string format_double(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    return out;
}

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ConfigError("checkpoint truncated");
    return v;
}

}  // namespace

void write_grid_csv(const std::string& path, const ValueGrid& values,
                    const PolicyGrid& policy, double theta) {
    std::ofstream out = open_out(path);
    const Grid& g = values.grid;
    out << "# rsam grid csv v1\n";
    out << "t";
    for (int d = 0; d < g.dim(); ++d) out << ",x" << (d + 1);
    out << ",phi_tilde,phi";
    for (int i = 0; i < policy.m; ++i) out << ",h" << (i + 1);
    out << "\n";
    for (int j = 0; j <= g.nt; ++j) {
        for (int flat = 0; flat < g.node_count(); ++flat) {
            const auto idx = g.unflatten(flat);
            out << format_double(g.time(j));
            for (int d = 0; d < g.dim(); ++d)
                out << ',' << format_double(g.coord(d, idx[d]));
            const double vt = values.at(j, flat);
            out << ',' << format_double(vt) << ','
                << format_double(-std::log(vt) / theta);
            for (int i = 0; i < policy.m; ++i)
                out << ',' << format_double(policy.slices[j](i, flat));
            out << "\n";
        }
    }
}

void write_checkpoint(const std::string& path, const ValueGrid& values,
                      const PolicyGrid& policy) {
    std::ofstream out = open_out(path);
    const Grid& g = values.grid;
    out.write("RSAMCKPT", 8);
    put<std::uint32_t>(out, 1);  // version
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(policy.m));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nt));
    for (int d = 0; d < g.dim(); ++d) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nodes[d]));
        put<double>(out, g.radius(d));
    }
    put<double>(out, g.dt);
    for (const auto& s : values.slices)
        out.write(reinterpret_cast<const char*>(s.data()),
                  static_cast<std::streamsize>(sizeof(double) * s.size()));
    for (const auto& s : policy.slices)
        out.write(reinterpret_cast<const char*>(s.data()),
                  static_cast<std::streamsize>(sizeof(double) * s.size()));
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "RSAMCKPT", 8) != 0)
        throw ConfigError("not a checkpoint file: " + path);
    if (get<std::uint32_t>(in) != 1)
        throw ConfigError("unsupported checkpoint version");
    const int dim = static_cast<int>(get<std::uint32_t>(in));
    const int m = static_cast<int>(get<std::uint32_t>(in));
    const int nt = static_cast<int>(get<std::uint32_t>(in));
    if (dim < 1 || dim > 2 || m < 1 || nt < 1)
        throw ConfigError("corrupt checkpoint header");
    Grid g;
    g.nodes.resize(dim);
    g.radius.resize(dim);
    for (int d = 0; d < dim; ++d) {
        g.nodes[d] = static_cast<int>(get<std::uint32_t>(in));
        g.radius(d) = get<double>(in);
    }
    g.nt = nt;
    g.dt = get<double>(in);

    Checkpoint ck;
    ck.values.grid = g;
    ck.policy.grid = g;
    ck.policy.m = m;
    const int N = g.node_count();
    ck.values.slices.assign(nt + 1, VectorXd::Zero(N));
    for (auto& s : ck.values.slices) {
        in.read(reinterpret_cast<char*>(s.data()),
                static_cast<std::streamsize>(sizeof(double) * N));
        if (!in) throw ConfigError("checkpoint truncated");
    }
    ck.policy.slices.assign(nt + 1, MatrixXd::Zero(m, N));
    for (auto& s : ck.policy.slices) {
        in.read(reinterpret_cast<char*>(s.data()),
                static_cast<std::streamsize>(sizeof(double) * m * N));
        if (!in) throw ConfigError("checkpoint truncated");
    }
    return ck;
}

void write_path_csv(const std::string& path, const SimPath& sim) {
    std::ofstream out = open_out(path);
    const int n = static_cast<int>(sim.X.rows());
    const int m = static_cast<int>(sim.logS.rows());
    out << "# rsam path csv v1\n";
    out << "t";
    for (int i = 0; i < n; ++i) out << ",x" << (i + 1);
    for (int i = 0; i < m; ++i) out << ",s" << (i + 1);
    out << ",v,chi\n";
    for (int k = 0; k < sim.times.size(); ++k) {
        out << format_double(sim.times(k));
        for (int i = 0; i < n; ++i) out << ',' << format_double(sim.X(i, k));
        for (int i = 0; i < m; ++i)
            out << ',' << format_double(std::exp(sim.logS(i, k)));
        out << ',' << format_double(std::exp(sim.logV(k))) << ','
            << format_double(std::exp(sim.logChi(k))) << "\n";
    }
}

void write_filter_csv(const std::string& path, const FilterRun& run,
                      const PathMesh& mesh) {
    std::ofstream out = open_out(path);
    const int n = static_cast<int>(run.x_hat.rows());
    const int m = static_cast<int>(run.dU.rows());
    out << "# rsam filter csv v1\n";
    out << "t";
    for (int i = 0; i < n; ++i) out << ",x_hat" << (i + 1);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) out << ",p" << (i + 1) << (k + 1);
    for (int i = 0; i < m; ++i) out << ",du" << (i + 1);
    out << "\n";
    const int K = static_cast<int>(run.dU.cols());
    for (int k = 0; k <= K; ++k) {
        out << format_double(k * mesh.dt());
        for (int i = 0; i < n; ++i) out << ',' << format_double(run.x_hat(i, k));
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l)
                out << ',' << format_double(run.P[static_cast<std::size_t>(k)](i, l));
        for (int i = 0; i < m; ++i)
            out << ',' << (k == 0 ? "" : format_double(run.dU(i, k - 1)));
        out << "\n";
    }
}

}  // namespace rsam
