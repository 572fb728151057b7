#pragma once

// Seeded synthetic domain-shift benchmark: one label space, one set of class
// prototypes, and per-domain input transforms x = R (scale (p_y + n)) + shift.
// Also pretraining of the reference backbone and the .ductds dataset format.

#include "duct/binary_io.hpp"
#include "duct/consolidate.hpp"
#include "duct/eval.hpp"
#include "duct/train.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace duct {

struct DomainSpec {
    std::uint64_t rotation_seed = 0;
    double rotation_angle = 0.0;  // max angle of each Givens factor; 0 => identity
    double scale = 1.0;
    std::vector<double> shift;  // empty => zero shift
    double noise_sigma = 0.3;

    static DomainSpec identity(double noise_sigma) { return {0, 0.0, 1.0, {}, noise_sigma}; }
};

struct BenchmarkSpec {
    std::size_t num_classes = 10;
    std::size_t input_dim = 16;
    std::vector<DomainSpec> domains;
    DomainSpec pretrain_domain = DomainSpec::identity(0.3);
    std::size_t train_per_class = 100;
    std::size_t test_per_class = 50;
    Matrix class_prototypes;  // num_classes x input_dim
    std::uint64_t seed = 0;

    void validate() const {
        if (num_classes < 1 || input_dim < 1) throw PreconditionError("benchmark: empty label space or input");
        if (class_prototypes.rows() != num_classes || class_prototypes.cols() != input_dim)
            throw ShapeError("benchmark: prototypes " + shape_str(class_prototypes) + " do not match " +
                             std::to_string(num_classes) + "x" + std::to_string(input_dim));
        if (train_per_class < 1 || test_per_class < 1) throw PreconditionError("benchmark: empty splits");
        auto check = [&](const DomainSpec& d, const std::string& where) {
            if (!(d.scale > 0.0)) throw PreconditionError(where + ": scale must be positive");
            if (!(d.noise_sigma >= 0.0)) throw PreconditionError(where + ": noise_sigma must be non-negative");
            if (!d.shift.empty() && d.shift.size() != input_dim) throw ShapeError(where + ": shift length");
            if (!(d.rotation_angle >= 0.0)) throw PreconditionError(where + ": rotation_angle must be non-negative");
        };
        for (std::size_t i = 0; i < domains.size(); ++i) check(domains[i], "domain " + std::to_string(i));
        check(pretrain_domain, "pretrain domain");
    }
};

struct DomainDataset {
    LabeledBatch train;
    LabeledBatch test;
    std::size_t domain_index = 0;
};

// Parameters of the desk-scale preset.
struct DeskPreset {
    std::size_t num_classes = 10;
    std::size_t input_dim = 16;
    std::size_t num_domains = 5;
    std::size_t train_per_class = 100;
    std::size_t test_per_class = 50;
    double noise_sigma = 0.3;
    double prototype_radius = 3.0;
    double min_prototype_distance = 3.0;
    double scale_lo = 0.7;
    double scale_hi = 1.4;
    double rotation_angle = 0.5;
    double shift_sigma = 0.5;
    double common_shift_sigma = 2.0;  // shared offset of every incremental domain from the pretraining domain
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    Rng r(seed ^ (tag * 0xD1B54A32D192ED03ULL));
    return r.next_u64();
}

// Points on the radius-r sphere in R^dim with a minimum pairwise distance.
inline Matrix make_prototypes(std::size_t n, std::size_t dim, double radius, double min_distance, Rng& rng) {
    Matrix out(n, dim);
    std::size_t placed = 0;
    std::size_t attempts = 0;
    std::vector<double> v(dim);
    while (placed < n) {
        if (++attempts > 100000) throw PreconditionError("make_prototypes: cannot satisfy minimum distance");
        for (double& x : v) x = rng.normal();
        const double norm = l2_norm(v);
        if (norm == 0.0) continue;
        for (double& x : v) x *= radius / norm;
        bool ok = true;
        for (std::size_t p = 0; p < placed && ok; ++p) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) d2 += (out(p, k) - v[k]) * (out(p, k) - v[k]);
            ok = std::sqrt(d2) >= min_distance;
        }
        if (!ok) continue;
        std::copy(v.begin(), v.end(), out.row(placed).begin());
        ++placed;
    }
    return out;
}

inline BenchmarkSpec desk_benchmark(std::uint64_t seed, const DeskPreset& p = {}) {
    BenchmarkSpec spec;
    spec.num_classes = p.num_classes;
    spec.input_dim = p.input_dim;
    spec.train_per_class = p.train_per_class;
    spec.test_per_class = p.test_per_class;
    spec.seed = seed;
    spec.pretrain_domain = DomainSpec::identity(p.noise_sigma);
    Rng rng(derive_seed(seed, 0xBE4C));
    spec.class_prototypes = make_prototypes(p.num_classes, p.input_dim, p.prototype_radius, p.min_prototype_distance, rng);
    std::vector<double> common(p.input_dim);
    for (double& c : common) c = p.common_shift_sigma * rng.normal();
    for (std::size_t i = 0; i < p.num_domains; ++i) {
        DomainSpec d;
        d.rotation_seed = rng.next_u64();
        d.rotation_angle = p.rotation_angle;
        d.scale = rng.uniform(p.scale_lo, p.scale_hi);
        d.shift.resize(p.input_dim);
        for (std::size_t k = 0; k < p.input_dim; ++k) d.shift[k] = common[k] + p.shift_sigma * rng.normal();
        d.noise_sigma = p.noise_sigma;
        spec.domains.push_back(std::move(d));
    }
    return spec;
}

// Product of Givens rotations over every coordinate plane in a seeded order,
// each by an angle drawn from [-max_angle, max_angle].
inline Matrix rotation_matrix(std::uint64_t seed, double max_angle, std::size_t dim) {
    Matrix r = Matrix::identity(dim);
    if (max_angle == 0.0) return r;
    Rng rng(seed);
    std::vector<std::pair<std::size_t, std::size_t>> planes;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j) planes.emplace_back(i, j);
    rng.shuffle(std::span(planes));
    for (const auto& [a, b] : planes) {
        const double theta = rng.uniform(-max_angle, max_angle);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        for (std::size_t k = 0; k < dim; ++k) {
            const double ra = r(a, k);
            const double rb = r(b, k);
            r(a, k) = c * ra - s * rb;
            r(b, k) = s * ra + c * rb;
        }
    }
    return r;
}

namespace detail {

inline LabeledBatch sample_split(const BenchmarkSpec& spec, const DomainSpec& dom, const Matrix& rot,
                                 std::size_t per_class, std::uint64_t stream_seed) {
    Rng rng(stream_seed);
    const std::size_t dim = spec.input_dim;
    LabeledBatch out;
    out.inputs = Matrix(spec.num_classes * per_class, dim);
    out.labels.reserve(spec.num_classes * per_class);
    std::vector<double> v(dim);
    std::size_t row = 0;
    for (std::size_t y = 0; y < spec.num_classes; ++y) {
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            for (std::size_t k = 0; k < dim; ++k)
                v[k] = dom.scale * (spec.class_prototypes(y, k) + dom.noise_sigma * rng.normal());
            auto x = out.inputs.row(row);
            for (std::size_t r = 0; r < dim; ++r) {
                double acc = 0.0;
                for (std::size_t k = 0; k < dim; ++k) acc += rot(r, k) * v[k];
                x[r] = acc + (dom.shift.empty() ? 0.0 : dom.shift[r]);
            }
            out.labels.push_back(y);
        }
    }
    return out;
}

inline DomainDataset generate_domain(const BenchmarkSpec& spec, const DomainSpec& dom, std::size_t index,
                                     std::uint64_t tag) {
    const Matrix rot = rotation_matrix(dom.rotation_seed, dom.rotation_angle, spec.input_dim);
    DomainDataset ds;
    ds.domain_index = index;
    ds.train = sample_split(spec, dom, rot, spec.train_per_class, derive_seed(spec.seed, 2 * tag + 1));
    ds.test = sample_split(spec, dom, rot, spec.test_per_class, derive_seed(spec.seed, 2 * tag + 2));
    return ds;
}

}  // namespace detail

inline constexpr std::size_t kPretrainDomainIndex = static_cast<std::size_t>(-1);

inline std::vector<DomainDataset> generate(const BenchmarkSpec& spec) {
    spec.validate();
    std::vector<DomainDataset> out;
    out.reserve(spec.domains.size());
    for (std::size_t i = 0; i < spec.domains.size(); ++i)
        out.push_back(detail::generate_domain(spec, spec.domains[i], i, i));
    return out;
}

inline DomainDataset generate_pretrain(const BenchmarkSpec& spec) {
    spec.validate();
    return detail::generate_domain(spec, spec.pretrain_domain, kPretrainDomainIndex, 0x7E57'0000ULL);
}

inline constexpr std::size_t kDefaultEmbedDim = 16;

struct PretrainResult {
    Backbone backbone;
    CosineClassifier head;
    ClassCenterTable centers;
    double test_accuracy = 0.0;
};

// Trains the reference backbone on the dedicated identity-transform domain.
inline PretrainResult pretrain_backbone(const BenchmarkSpec& spec, const TrainConfig& cfg,
                                        std::size_t embed_dim = kDefaultEmbedDim) {
    const DomainDataset ds = generate_pretrain(spec);
    Rng init_rng(derive_seed(cfg.seed, 0x1417));
    const Backbone init = Backbone::init(spec.input_dim, embed_dim, init_rng);
    const ClassCenterTable init_centers = class_centers(init, ds.train, spec.num_classes);
    const CosineClassifier head0 =
        expand_classifier(CosineClassifier::empty(embed_dim, spec.num_classes), transpose(init_centers.centers));
    FinetuneResult ft = finetune(init, head0, ds.train, cfg);
    PretrainResult out;
    out.backbone = std::move(ft.backbone);
    out.head = std::move(ft.classifier);
    out.centers = class_centers(out.backbone, ds.train, spec.num_classes, "phi0", kPretrainDomainIndex);
    out.test_accuracy = accuracy(out.backbone, out.head, ds.test);
    return out;
}

// --- .ductds files: one labeled split per file ---------------------------

inline constexpr std::string_view kDatasetMagic = "DUCTDS";
inline constexpr std::uint16_t kDatasetVersion = 1;

inline std::vector<std::uint8_t> encode_batch(const LabeledBatch& batch, std::size_t num_classes) {
    batch.validate(num_classes);
    io::ByteWriter w;
    w.bytes(kDatasetMagic);
    w.u16(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(num_classes));
    w.u32(static_cast<std::uint32_t>(batch.inputs.cols()));
    w.u32(static_cast<std::uint32_t>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        w.u32(static_cast<std::uint32_t>(batch.labels[i]));
        for (double v : batch.inputs.row(i)) w.f64(v);
    }
    return w.buffer();
}

struct DecodedBatch {
    LabeledBatch batch;
    std::size_t num_classes = 0;
};

inline DecodedBatch decode_batch(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes);
    r.expect_magic(kDatasetMagic);
    const std::size_t version_at = r.offset();
    if (const auto v = r.u16(); v != kDatasetVersion)
        throw FormatError("unsupported dataset version " + std::to_string(v), version_at);
    DecodedBatch out;
    out.num_classes = r.u32();
    const std::size_t dim = r.u32();
    const std::size_t n = r.u32();
    const std::size_t record_bytes = 4 + 8 * dim;
    if (r.remaining() < n * record_bytes)
        throw FormatError("truncated dataset: " + std::to_string(n) + " records declared", r.offset());
    std::vector<double> values(n * dim);
    out.batch.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = r.offset();
        const std::size_t label = r.u32();
        if (label >= out.num_classes)
            throw FormatError("record " + std::to_string(i) + " has label " + std::to_string(label) +
                                  " >= num_classes " + std::to_string(out.num_classes),
                              at);
        out.batch.labels[i] = label;
        for (std::size_t k = 0; k < dim; ++k) {
            const std::size_t value_at = r.offset();
            values[i * dim + k] = r.f64();
            if (!std::isfinite(values[i * dim + k]))
                throw FormatError("record " + std::to_string(i) + " has a non-finite value", value_at);
        }
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after dataset records", r.offset());
    out.batch.inputs = Matrix(n, dim, std::move(values));
    return out;
}

inline void save_batch(const std::filesystem::path& path, const LabeledBatch& batch, std::size_t num_classes) {
    io::write_file(path, encode_batch(batch, num_classes));
}

inline DecodedBatch load_batch(const std::filesystem::path& path) { return decode_batch(io::read_file(path)); }

// A domain is stored as "<stem>.train.ductds" and "<stem>.test.ductds".
inline void save_dataset(const std::filesystem::path& stem, const DomainDataset& ds, std::size_t num_classes) {
    save_batch(stem.string() + ".train.ductds", ds.train, num_classes);
    save_batch(stem.string() + ".test.ductds", ds.test, num_classes);
}

inline DomainDataset load_dataset(const std::filesystem::path& stem, std::size_t domain_index = 0) {
    DecodedBatch train = load_batch(stem.string() + ".train.ductds");
    DecodedBatch test = load_batch(stem.string() + ".test.ductds");
    if (train.num_classes != test.num_classes || train.batch.inputs.cols() != test.batch.inputs.cols())
        throw FormatError("train/test headers disagree for '" + stem.string() + "'", 0);
    return {std::move(train.batch), std::move(test.batch), domain_index};
}

}  // namespace duct
