#include "armor/dataio.hpp"

#include "armor/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace armor {

void Dataset::validate() const {
    if (features.rows() != static_cast<Eigen::Index>(labels.size()))
        throw DataError(DataError::Code::CountMismatch, "feature/label count mismatch");
    for (int label : labels)
        if (label < 0 || label >= num_classes)
            throw DataError(DataError::Code::Format, "label out of range");
    if (domain == DataDomain::BinaryMonotone) {
        if (((features.array() != 0.0) && (features.array() != 1.0)).any())
            throw DataError(DataError::Code::Format,
                            "binary-monotone dataset has a non 0/1 feature");
    } else {
        if (box_lo.size() != dim() || box_hi.size() != dim())
            throw DataError(DataError::Code::Format, "box bounds missing or wrong size");
        for (Eigen::Index i = 0; i < features.rows(); ++i)
            for (Eigen::Index j = 0; j < features.cols(); ++j)
                if (features(i, j) < box_lo[j] - 1e-12 || features(i, j) > box_hi[j] + 1e-12)
                    throw DataError(DataError::Code::Format, "feature outside the declared box");
    }
}

Dataset Dataset::head(Eigen::Index n) const {
    Dataset out = *this;
    n = std::min(n, size());
    out.features = features.topRows(n);
    out.labels.assign(labels.begin(), labels.begin() + n);
    return out;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw DataError(DataError::Code::Truncated, "truncated IDX header in " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError(DataError::Code::Io, "cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError(DataError::Code::Io, "cannot open " + labels_path);

    if (read_be32(img, images_path) != 0x00000803u)
        throw DataError(DataError::Code::BadMagic, "bad image magic in " + images_path);
    if (read_be32(lab, labels_path) != 0x00000801u)
        throw DataError(DataError::Code::BadMagic, "bad label magic in " + labels_path);

    const std::uint32_t n_img = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const std::uint32_t n_lab = read_be32(lab, labels_path);
    if (n_img != n_lab)
        throw DataError(DataError::Code::CountMismatch,
                        "image/label counts differ between " + images_path + " and " + labels_path);

    std::size_t n = n_img;
    if (limit > 0) n = std::min<std::size_t>(n, limit);
    const std::size_t d = std::size_t(rows) * cols;

    Dataset data;
    data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    data.labels.resize(n);
    data.num_classes = 10;
    data.domain = DataDomain::BoxContinuous;
    data.box_lo = Vec::Zero(static_cast<Eigen::Index>(d));
    data.box_hi = Vec::Ones(static_cast<Eigen::Index>(d));

    std::vector<unsigned char> pix(d);
    for (std::size_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(d));
        if (!img)
            throw DataError(DataError::Code::Truncated, "truncated image data in " + images_path);
        for (std::size_t j = 0; j < d; ++j)
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<double>(pix[j]) / 255.0;
        unsigned char y;
        lab.read(reinterpret_cast<char*>(&y), 1);
        if (!lab)
            throw DataError(DataError::Code::Truncated, "truncated label data in " + labels_path);
        data.labels[i] = static_cast<int>(y);
    }
    data.validate();
    return data;
}

Dataset gen_moons(int n, double noise, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("gen_moons: n must be even and >= 2");
    Rng rng(seed);
    const int half = n / 2;
    Dataset data;
    data.features.resize(n, 2);
    data.labels.resize(n);
    data.num_classes = 2;
    data.domain = DataDomain::BoxContinuous;
    data.box_lo = Vec::Zero(2);
    data.box_hi = Vec::Ones(2);

    // Raw arcs: class 0 on the upper unit half-circle, class 1 on a shifted
    // lower half-circle; raw coordinates live in [-1,2] x [-0.5,1], mapped by
    // a fixed affine transform into [0,1]^2.
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        const int cls = i < half ? 0 : 1;
        const int j = cls == 0 ? i : i - half;
        const double t = half > 1 ? pi * j / (half - 1) : 0.0;
        double x = cls == 0 ? std::cos(t) : 1.0 - std::cos(t);
        double y = cls == 0 ? std::sin(t) : 0.5 - std::sin(t);
        x += noise * rng.normal();
        y += noise * rng.normal();
        data.features(i, 0) = std::min(std::max((x + 1.0) / 3.0, 0.0), 1.0);
        data.features(i, 1) = std::min(std::max((y + 0.5) / 1.5, 0.0), 1.0);
        data.labels[i] = cls;
    }
    data.validate();
    return data;
}

bool PlantedRule::eval(const Vec& bits) const {
    for (const auto& clause : clauses) {
        bool all = true;
        for (int b : clause) all = all && bits[b] == 1.0;
        if (all) return true;
    }
    return false;
}

Dataset gen_binary(int n, int d, const PlantedRule& rule, std::uint64_t seed) {
    if (d < 4) throw std::invalid_argument("gen_binary: d must be >= 4");
    for (const auto& clause : rule.clauses)
        for (int b : clause)
            if (b < 0 || b >= d) throw std::invalid_argument("gen_binary: rule bit out of range");
    Rng rng(seed);
    Dataset data;
    data.features.resize(n, d);
    data.labels.resize(n);
    data.num_classes = 2;
    data.domain = DataDomain::BinaryMonotone;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.features(i, j) = rng.uniform() < 0.5 ? 1.0 : 0.0;
        bool label = rule.eval(data.features.row(i).transpose());
        if (rule.flip_noise > 0.0 && rng.uniform() < rule.flip_noise) label = !label;
        data.labels[i] = label ? 1 : 0;
    }
    data.validate();
    return data;
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError(DataError::Code::Io, "cannot open " + path);
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << 'f' << j << ',';
    out << "label\n";
    char buf[64];
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.features(i, j));
            out << buf << ',';
        }
        out << data.labels[i] << '\n';
    }
    if (!out) throw DataError(DataError::Code::Io, "write failed for " + path);
}

Dataset load_csv(const std::string& path, DataDomain domain) {
    std::ifstream in(path);
    if (!in) throw DataError(DataError::Code::Io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw DataError(DataError::Code::Truncated, "empty CSV " + path);
    Eigen::Index d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));

    std::vector<double> values;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        Eigen::Index col = 0;
        for (; std::getline(row, field, ','); ++col) {
            if (col < d)
                values.push_back(std::stod(field));
            else
                labels.push_back(std::stoi(field));
        }
        if (col != d + 1)
            throw DataError(DataError::Code::Format, "ragged CSV row in " + path);
    }

    Dataset data;
    const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
    data.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = values[i * d + j];
    data.labels = labels;
    data.num_classes = 1 + (labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()));
    data.num_classes = std::max(data.num_classes, 2);
    data.domain = domain;
    if (domain == DataDomain::BoxContinuous) {
        data.box_lo = Vec::Zero(d);
        data.box_hi = Vec::Ones(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            data.box_lo[j] = std::min(0.0, data.features.col(j).minCoeff());
            data.box_hi[j] = std::max(1.0, data.features.col(j).maxCoeff());
        }
    }
    data.validate();
    return data;
}

}  // namespace armor
