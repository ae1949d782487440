#include "femem/csv.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "femem/errors.hpp"

namespace femem {

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
    if (!out_) throw IoError("cannot write " + path.string());
    bool first = true;
    for (std::string_view h : header) {
        if (!first) out_ << ',';
        out_ << h;
        first = false;
    }
    out_ << '\n';
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_number(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

CsvWriter& CsvWriter::cell(std::string_view v) {
    if (filled_ == columns_) throw std::logic_error("csv row has too many cells");
    if (filled_ > 0) out_ << ',';
    out_ << v;
    ++filled_;
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_) throw std::logic_error("csv row has too few cells");
    out_ << '\n';
    filled_ = 0;
    if (!out_) throw IoError("write failed");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r' && c != ' ' && c != '\t') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_cell(const std::string& s, const std::filesystem::path& path, int line) {
    double v = 0.0;
    const char* b = s.data();
    if (!s.empty() && s.front() == '+') ++b;
    const auto [ptr, ec] = std::from_chars(b, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ModelError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    }
    return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

}  // namespace

SweepSet read_sweeps_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ModelError(path.string() + ": empty file");
    const auto header = split_line(line);
    int col_t = -1, col_v = -1, col_j = -1;
    for (int k = 0; k < static_cast<int>(header.size()); ++k) {
        if (header[k] == "t_kelvin") col_t = k;
        if (header[k] == "v_volts") col_v = k;
        if (header[k] == "j_a_per_m2") col_j = k;
    }
    if (col_t < 0 || col_v < 0 || col_j < 0) {
        throw ModelError(path.string() + ": header must contain t_kelvin, v_volts, j_a_per_m2");
    }
    std::map<double, std::vector<SweepPoint>> by_t;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw ModelError(path.string() + ":" + std::to_string(line_no) + ": wrong number of fields");
        }
        const double t = parse_cell(cells[col_t], path, line_no);
        by_t[t].push_back({parse_cell(cells[col_v], path, line_no), parse_cell(cells[col_j], path, line_no)});
    }
    SweepSet out;
    for (auto& [t, pts] : by_t) {
        std::sort(pts.begin(), pts.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.v < b.v; });
        out.push_back({t, std::move(pts)});
    }
    validate(out);
    return out;
}

void write_sweeps_csv(const std::filesystem::path& path, const SweepSet& data) {
    CsvWriter w(path, {"t_kelvin", "v_volts", "j_a_per_m2"});
    for (const Sweep& s : data) {
        for (const SweepPoint& p : s.points) {
            w.cell(s.t_kelvin).cell(p.v).cell(p.j);
            w.end_row();
        }
    }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        for (const std::string& c : split_line(line)) row.push_back(parse_cell(c, path, line_no));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ModelError(path.string() + ":" + std::to_string(line_no) + ": ragged matrix row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ModelError(path.string() + ": empty matrix");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_number(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace femem
