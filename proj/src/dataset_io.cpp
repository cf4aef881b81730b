#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "homtom/reconstruction.hpp"
#include "nlohmann/json.hpp"

namespace homtom {
namespace {

using nlohmann::json;

const char* kind_name(StateKind k) {
    switch (k) {
        case StateKind::coherent: return "coherent";
        case StateKind::squeezed: return "squeezed";
        case StateKind::fock: return "fock";
    }
    throw std::invalid_argument("unknown state kind");
}

StateKind kind_from(const std::string& name) {
    if (name == "coherent" || name == "vacuum") return StateKind::coherent;
    if (name == "squeezed") return StateKind::squeezed;
    if (name == "fock") return StateKind::fock;
    throw std::invalid_argument("unknown state kind: " + name);
}

}  // namespace

void write_dataset(const HomodyneDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());

    const json header = {
        {"state",
         {{"kind", kind_name(ds.state.kind)},
          {"mean_photons", ds.state.mean_photons},
          {"squeeze_r", ds.state.squeeze_r},
          {"squeeze_angle", ds.state.squeeze_angle},
          {"alpha_phase", ds.state.alpha_phase},
          {"fock_n", ds.state.fock_n}}},
        {"eta", ds.eta},
        {"f", ds.f},
        {"N", ds.n_records},
        {"seed", ds.seed},
    };
    out << header.dump() << '\n';

    char line[96];
    for (const auto& r : ds.records) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", r.phase_index, r.phi, r.x);
        out << line;
    }
    if (!out) throw std::runtime_error("short write: " + path.string());
}

HomodyneDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());

    std::string first;
    if (!std::getline(in, first)) throw std::invalid_argument("empty dataset file");

    HomodyneDataset ds;
    try {
        const json header = json::parse(first);
        const json& st = header.at("state");
        ds.state.kind = kind_from(st.at("kind").get<std::string>());
        ds.state.mean_photons = st.at("mean_photons").get<double>();
        ds.state.squeeze_r = st.at("squeeze_r").get<double>();
        ds.state.squeeze_angle = st.at("squeeze_angle").get<double>();
        ds.state.alpha_phase = st.at("alpha_phase").get<double>();
        ds.state.fock_n = st.at("fock_n").get<int>();
        ds.eta = header.at("eta").get<double>();
        ds.f = header.at("f").get<int>();
        ds.n_records = header.at("N").get<long long>();
        ds.seed = header.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad dataset header: ") + e.what());
    }
    ds.state.validate();

    ds.records.reserve(ds.n_records > 0 ? static_cast<std::size_t>(ds.n_records) : 0);
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        HomodyneRecord r;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf", &r.phase_index, &r.phi, &r.x) != 3)
            throw std::invalid_argument("bad dataset row at line " + std::to_string(line_no));
        ds.records.push_back(r);
    }
    if (ds.n_records >= 0 && ds.records.size() != static_cast<std::size_t>(ds.n_records))
        throw std::invalid_argument("dataset row count does not match header N");
    return ds;
}

}  // namespace homtom
