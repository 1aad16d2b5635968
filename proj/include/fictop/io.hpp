#pragma once

// Output writers: legacy ASCII VTK unstructured grids, the history CSV and
// cross-section profile CSVs.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fictop/fem.hpp"
#include "fictop/fictitious.hpp"
#include "fictop/mesh.hpp"
#include "fictop/optimizer.hpp"

namespace fictop {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class VtkWriter {
  public:
    VtkWriter& point_scalars(std::string name, const ScalarField& f) {
        point_fields_.emplace_back(std::move(name), f);
        return *this;
    }
    VtkWriter& cell_scalars(std::string name, std::vector<double> f) {
        cell_fields_.emplace_back(std::move(name), std::move(f));
        return *this;
    }

    void write(const Mesh& mesh, const std::string& path,
               const std::string& title = "fictop fields") const {
        std::ofstream os(path);
        if (!os) throw io_error("VtkWriter: cannot open " + path);
        char buf[64];
        auto num = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.9g", v);
            return std::string(buf);
        };

        os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
        os << "DATASET UNSTRUCTURED_GRID\n";
        os << "POINTS " << mesh.num_nodes() << " double\n";
        for (const auto& p : mesh.nodes) os << num(p.x) << ' ' << num(p.y) << " 0\n";
        os << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << '\n';
        for (const auto& t : mesh.triangles)
            os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
        os << "CELL_TYPES " << mesh.num_elements() << '\n';
        for (int e = 0; e < mesh.num_elements(); ++e) os << "5\n";

        if (!point_fields_.empty()) {
            os << "POINT_DATA " << mesh.num_nodes() << '\n';
            for (const auto& [name, f] : point_fields_) {
                if (f.size() != mesh.num_nodes())
                    throw io_error("VtkWriter: size mismatch for point field " + name);
                os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
                for (int n = 0; n < f.size(); ++n) os << num(f[n]) << '\n';
            }
        }
        if (!cell_fields_.empty()) {
            os << "CELL_DATA " << mesh.num_elements() << '\n';
            for (const auto& [name, f] : cell_fields_) {
                if (static_cast<int>(f.size()) != mesh.num_elements())
                    throw io_error("VtkWriter: size mismatch for cell field " + name);
                os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
                for (double v : f) os << num(v) << '\n';
            }
        }
        if (!os) throw io_error("VtkWriter: write failure on " + path);
    }

  private:
    std::vector<std::pair<std::string, ScalarField>> point_fields_;
    std::vector<std::pair<std::string, std::vector<double>>> cell_fields_;
};

inline ScalarField displacement_magnitude(const VectorField& u) {
    ScalarField m(u.size() / 2);
    for (int n = 0; n < m.size(); ++n)
        m[n] = std::sqrt(u[2 * n] * u[2 * n] + u[2 * n + 1] * u[2 * n + 1]);
    return m;
}

class HistoryCsvWriter {
  public:
    explicit HistoryCsvWriter(const std::string& path) : os_(path) {
        if (!os_) throw io_error("HistoryCsvWriter: cannot open " + path);
        os_ << "iter,volume_fraction,Ju,Js,Jp,J_combined,lambda,mu\n";
        os_.flush();
    }

    void append(const HistoryRow& r) {
        char line[320];
        std::snprintf(line, sizeof line, "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      r.iter, r.volume_fraction, r.Ju, r.Js, r.Jp, r.J_combined, r.lambda,
                      r.mu);
        os_ << line;
        os_.flush();
    }

  private:
    std::ofstream os_;
};

inline void write_profile_csv(const std::vector<ProfileSample>& profile,
                              const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("write_profile_csv: cannot open " + path);
    os << "x,value,grad_magnitude\n";
    char line[128];
    for (const auto& s : profile) {
        std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g\n", s.t, s.value, s.grad);
        os << line;
    }
}

}  // namespace fictop
