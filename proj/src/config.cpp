#include "phasetunnel/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "phasetunnel/errors.hpp"

namespace phasetunnel {

std::string fingerprint(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    static constexpr char digits[] = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[hash & 0xf];
        hash >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double_strict(const std::string& text) {
    std::size_t a = 0, b = text.size();
    while (a < b && std::isspace(static_cast<unsigned char>(text[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
    double v = 0.0;
    const char* first = text.data() + a;
    if (a < b && *first == '+') ++first;
    const auto res = std::from_chars(first, text.data() + b, v);
    if (a == b || res.ec != std::errc() || res.ptr != text.data() + b)
        throw InputError("not a number: '" + text + "'");
    return v;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (trim(cell).empty()) continue;
        out.push_back(parse_double_strict(cell));
    }
    return out;
}

int parse_int(const std::string& s) {
    const double v = parse_double_strict(s);
    if (v != static_cast<int>(v)) throw InputError("not an integer: '" + s + "'");
    return static_cast<int>(v);
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (kv.count(key)) throw InputError("config: duplicate key '" + key + "'");
        kv[key] = trim(line.substr(eq + 1));
    }

    RunConfig c;
    std::string family = "radial";
    std::vector<double> a_entries;
    for (const auto& [key, value] : kv) {
        if (key == "n") c.params.n = parse_int(value);
        else if (key == "mu") c.params.mu = parse_double_strict(value);
        else if (key == "tau") c.params.tau = parse_double_strict(value);
        else if (key == "c") c.params.coupling_c = parse_double_strict(value);
        else if (key == "h") c.params.planck_h = parse_double_strict(value);
        else if (key == "delta") c.params.strip_delta = parse_double_strict(value);
        else if (key == "family") family = value;
        else if (key == "A") a_entries = parse_list(value);
        else if (key == "grid.order") c.stencil_order = parse_int(value);
        else if (key == "grid.n1.L") c.n1_half_width = parse_double_strict(value);
        else if (key == "grid.n1.max_points") c.n1_max_points = parse_int(value);
        else if (key == "grid.n2.L") c.n2_half_width = parse_double_strict(value);
        else if (key == "grid.n2.points") c.n2_points = parse_int(value);
        else if (key == "scan.h") c.h_list = parse_list(value);
        else if (key == "scan.theta") c.theta = parse_double_strict(value);
        else if (key == "scan.level") c.level = parse_int(value);
        else if (key == "scan.workers") c.workers = parse_int(value);
        else if (key == "tol.eikonal") c.tol_eikonal = parse_double_strict(value);
        else if (key == "tol.pair") c.tol_pair = parse_double_strict(value);
        else if (key == "tol.resonance") c.tol_resonance = parse_double_strict(value);
        else if (key == "tol.weber") c.tol_weber = parse_double_strict(value);
        else if (key == "tol.residual") c.tol_residual = parse_double_strict(value);
        else if (key == "tol.drift") c.tol_drift = parse_double_strict(value);
        else if (key == "output.file") c.output_file = value;
        else if (key == "output.cache") c.cache_file = value;
        else throw InputError("config: unknown key '" + key + "'");
    }
    const int n = c.params.n;
    if (n != 1 && n != 2) throw InputError("config: n must be 1 or 2");
    if (family == "radial") {
        c.potential = PotentialModel::radial(n);
        if (!a_entries.empty()) {
            MatR a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                a_entries.data(), n, n);
            if (static_cast<int>(a_entries.size()) != n * n || !a.isIdentity(0.0))
                throw InputError("config: radial family requires A = identity");
        }
    } else if (family == "anisotropic") {
        if (static_cast<int>(a_entries.size()) != n * n)
            throw InputError("config: A needs n*n entries");
        MatR a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            a_entries.data(), n, n);
        c.potential = PotentialModel::anisotropic(a);
    } else {
        throw InputError("config: unknown family '" + family + "'");
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string RunConfig::serialize() const {
    std::ostringstream os;
    const int n = params.n;
    os << "n = " << n << "\n";
    os << "mu = " << format_double(params.mu) << "\n";
    os << "tau = " << format_double(params.tau) << "\n";
    os << "c = " << format_double(params.coupling_c) << "\n";
    os << "h = " << format_double(params.planck_h) << "\n";
    os << "delta = " << format_double(params.strip_delta) << "\n";
    os << "family = "
       << (potential.family == PotentialFamily::RadialGaussianWell ? "radial" : "anisotropic") << "\n";
    std::vector<double> a;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a.push_back(potential.aniso_matrix(i, j));
    os << "A = " << join(a) << "\n";
    os << "grid.order = " << stencil_order << "\n";
    os << "grid.n1.L = " << format_double(n1_half_width) << "\n";
    os << "grid.n1.max_points = " << n1_max_points << "\n";
    os << "grid.n2.L = " << format_double(n2_half_width) << "\n";
    os << "grid.n2.points = " << n2_points << "\n";
    os << "scan.h = " << join(h_list) << "\n";
    os << "scan.theta = " << format_double(theta) << "\n";
    os << "scan.level = " << level << "\n";
    os << "scan.workers = " << workers << "\n";
    os << "tol.eikonal = " << format_double(tol_eikonal) << "\n";
    os << "tol.pair = " << format_double(tol_pair) << "\n";
    os << "tol.resonance = " << format_double(tol_resonance) << "\n";
    os << "tol.weber = " << format_double(tol_weber) << "\n";
    os << "tol.residual = " << format_double(tol_residual) << "\n";
    os << "tol.drift = " << format_double(tol_drift) << "\n";
    os << "output.file = " << output_file << "\n";
    os << "output.cache = " << cache_file << "\n";
    return os.str();
}

std::string RunConfig::fingerprint() const { return phasetunnel::fingerprint(serialize()); }

void RunConfig::validate() const {
    params.validate();
    potential.validate();
    if (potential.dim() != params.n) throw InputError("config: A dimension differs from n");
    if (stencil_order != 2 && stencil_order != 4) throw InputError("config: grid.order must be 2 or 4");
    if (!(n1_half_width > 0.0) || !(n2_half_width > 0.0)) throw InputError("config: grid half widths must be positive");
    if (n1_max_points < 64 || n2_points < 64) throw InputError("config: at least 64 grid points");
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        if (!(h_list[i] > 0.0)) throw InputError("config: scan.h entries must be positive");
        if (i > 0 && !(h_list[i] < h_list[i - 1])) throw InputError("config: scan.h must be descending");
    }
    if (theta < 0.0 || theta > 0.5) throw InputError("config: scan.theta must lie in [0, 0.5]");
    if (level < 1) throw InputError("config: scan.level must be >= 1");
    if (workers < 1) throw InputError("config: scan.workers must be >= 1");
    for (double t : {tol_eikonal, tol_pair, tol_resonance, tol_weber, tol_residual, tol_drift})
        if (!(t > 0.0)) throw InputError("config: tolerances must be positive");
}

}  // namespace phasetunnel
