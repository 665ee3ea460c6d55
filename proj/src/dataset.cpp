#include "mve/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mve/errors.hpp"
#include "mve/png_io.hpp"
#include "mve/rng.hpp"

namespace mve {

namespace {

using json = nlohmann::json;

std::uint64_t fnv1a_append(std::uint64_t hash, const std::string& text) {
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    hash ^= 0xff; // field separator
    hash *= 0x100000001b3ULL;
    return hash;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

void sort_and_index(DatasetManifest& manifest) {
    std::set<std::string> names;
    for (const auto& entry : manifest.entries) names.insert(entry.class_name);
    manifest.class_names.assign(names.begin(), names.end());

    std::map<std::string, int> index;
    for (std::size_t i = 0; i < manifest.class_names.size(); ++i)
        index[manifest.class_names[i]] = static_cast<int>(i);
    for (auto& entry : manifest.entries) entry.label = index[entry.class_name];

    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) {
                  if (a.class_name != b.class_name) return a.class_name < b.class_name;
                  return a.image_path < b.image_path;
              });
}

bool is_png(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png";
}

DatasetManifest manifest_from_csv(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open manifest '" + csv_path.string() + "'");
    DatasetManifest manifest;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            first = false;
            if (fields.size() >= 2 && fields[0] == "image_path") continue; // header
        }
        if (fields.size() < 2)
            throw ParseError("manifest line needs image_path,class_name[,source_tag]: " + line);
        DatasetEntry entry;
        entry.image_path = fields[0];
        entry.class_name = fields[1];
        entry.source_tag = fields.size() > 2 ? fields[2] : "";
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

DatasetManifest manifest_from_tree(const std::filesystem::path& root) {
    DatasetManifest manifest;
    for (const auto& dir_entry : std::filesystem::directory_iterator(root)) {
        if (!dir_entry.is_directory()) continue;
        const std::string class_name = dir_entry.path().filename().string();
        bool any = false;
        for (const auto& file : std::filesystem::directory_iterator(dir_entry.path())) {
            if (!file.is_regular_file() || !is_png(file.path())) continue;
            DatasetEntry entry;
            entry.image_path = class_name + "/" + file.path().filename().string();
            entry.class_name = class_name;
            manifest.entries.push_back(std::move(entry));
            any = true;
        }
        if (!any) throw EmptyClass("class directory '" + class_name + "' contains no PNG files");
    }
    return manifest;
}

void validate_spec(const SyntheticSpec& spec) {
    if (spec.class_count < 2) throw SpecOutOfRange("class_count must be >= 2");
    if (spec.per_class < 1) throw SpecOutOfRange("per_class must be >= 1");
    if (spec.image_side < 16) throw SpecOutOfRange("image_side must be >= 16");
    if (static_cast<int>(spec.shapes.size()) != spec.class_count)
        throw SpecOutOfRange("need exactly one ClassShape per class");
    if (spec.color_noise_amplitude < 0) throw SpecOutOfRange("noise amplitude must be >= 0");
    for (const auto& shape : spec.shapes) {
        if (shape.whorl_count < 1) throw SpecOutOfRange("whorl_count must be >= 1");
        if (shape.proloculus_radius <= 0) throw SpecOutOfRange("proloculus_radius must be > 0");
        if (shape.eccentricity < 0 || shape.eccentricity >= 1)
            throw SpecOutOfRange("eccentricity must be in [0, 1)");
        if (shape.wall_thickness <= 0) throw SpecOutOfRange("wall_thickness must be > 0");
        if (shape.loosening_rate <= 0) throw SpecOutOfRange("loosening_rate must be > 0");
    }
    for (std::size_t i = 0; i < spec.shapes.size(); ++i)
        for (std::size_t j = i + 1; j < spec.shapes.size(); ++j)
            if (spec.shapes[i] == spec.shapes[j])
                throw SpecOutOfRange("classes must have distinct shape parameters");
}

// Unit vectors spanning the plane orthogonal to the luminance weights
// (0.299, 0.587, 0.114): tint noise along them cancels in the Grey view
// up to 8-bit rounding.
constexpr double kTintU[3] = {0.8910421071, -0.4539532703, 0.0};
constexpr double kTintV[3] = {0.0774238819, 0.1519836075, -0.9853446594};

constexpr int kWallIntensity = 75;
constexpr int kBackgroundIntensity = 180;

std::uint8_t clamp_channel(double v) {
    const double r = std::floor(v + 0.5);
    if (r < 0) return 0;
    if (r > 255) return 255;
    return static_cast<std::uint8_t>(r);
}

RasterImage render_shell(const SyntheticSpec& spec, const ClassShape& shape,
                         std::uint64_t image_seed) {
    Rng rng(image_seed);
    const int side = spec.image_side;
    const double theta = rng.real01() * std::numbers::pi;
    const double cx = side / 2.0 + rng.symmetric(2.0);
    const double cy = side / 2.0 + rng.symmetric(2.0);
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);

    std::vector<double> semi_major(static_cast<std::size_t>(shape.whorl_count));
    for (int w = 0; w < shape.whorl_count; ++w)
        semi_major[static_cast<std::size_t>(w)] =
            shape.proloculus_radius * std::pow(shape.loosening_rate, w);
    const double axis_ratio = 1.0 - shape.eccentricity;
    // the annotated outline is a fixed circle shared by every class, so the
    // specimen outline itself carries no class signal
    const double outline = 0.46 * side;

    RasterImage img(side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double u = x - cx, v = y - cy;
            const double ur = u * cos_t + v * sin_t;
            const double vr = -u * sin_t + v * cos_t;

            bool on_wall = false;
            for (double a : semi_major) {
                const double b = a * axis_ratio;
                const double e = std::sqrt((ur / a) * (ur / a) + (vr / b) * (vr / b));
                if (std::abs(e - 1.0) <= shape.wall_thickness / (2.0 * a)) {
                    on_wall = true;
                    break;
                }
            }
            const int base = on_wall ? kWallIntensity : kBackgroundIntensity;

            const double alpha_e = std::sqrt(u * u + v * v) / outline;
            const std::uint8_t alpha = alpha_e <= 1.0 ? 255 : 0;

            const double amp = static_cast<double>(spec.color_noise_amplitude);
            const double s = rng.symmetric(amp);
            const double t = rng.symmetric(amp);
            img.at(x, y) = Rgba{clamp_channel(base + s * kTintU[0] + t * kTintV[0]),
                                clamp_channel(base + s * kTintU[1] + t * kTintV[1]),
                                clamp_channel(base + s * kTintU[2] + t * kTintV[2]), alpha};
        }
    }
    return img;
}

} // namespace

std::vector<std::vector<std::size_t>> DatasetManifest::per_class_indices() const {
    std::vector<std::vector<std::size_t>> result(class_names.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        result[static_cast<std::size_t>(entries[i].label)].push_back(i);
    return result;
}

std::string DatasetManifest::fingerprint() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const auto& name : class_names) hash = fnv1a_append(hash, name);
    for (const auto& entry : entries) {
        hash = fnv1a_append(hash, entry.image_path);
        hash = fnv1a_append(hash, entry.class_name);
        hash = fnv1a_append(hash, entry.source_tag);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

SyntheticSpec default_synthetic_spec() {
    SyntheticSpec spec;
    spec.class_count = 6;
    spec.per_class = 80;
    spec.image_side = 96;
    spec.color_noise_amplitude = 90;
    spec.seed = 0;
    // near-circular coils: annulus patterns stay linearly learnable under
    // random rotation, so class identity lives in whorl layout, not pose
    spec.shapes = {
        ClassShape{3, 5.0, 0.05, 2.5, 2.00},
        ClassShape{5, 3.5, 0.10, 2.5, 1.70},
        ClassShape{4, 4.0, 0.15, 2.5, 1.80},
        ClassShape{6, 3.0, 0.10, 2.0, 1.55},
        ClassShape{4, 8.0, 0.05, 3.0, 1.45},
        ClassShape{7, 2.5, 0.15, 1.5, 1.50},
    };
    return spec;
}

Dataset Dataset::from_directory(const std::filesystem::path& root) {
    if (!std::filesystem::exists(root) || !std::filesystem::is_directory(root))
        throw MissingRoot("dataset root '" + root.string() + "' does not exist");

    Dataset ds;
    ds.root_ = root;
    const auto csv_path = root / "manifest.csv";
    ds.manifest_ = std::filesystem::exists(csv_path) ? manifest_from_csv(csv_path)
                                                     : manifest_from_tree(root);
    if (ds.manifest_.entries.empty())
        throw EmptyClass("dataset at '" + root.string() + "' contains no images");
    sort_and_index(ds.manifest_);
    if (ds.manifest_.class_count() < 2)
        throw ParseError("dataset needs at least 2 classes, found " +
                         std::to_string(ds.manifest_.class_count()));
    return ds;
}

Dataset Dataset::synthetic(const SyntheticSpec& spec) {
    validate_spec(spec);

    Dataset ds;
    for (int c = 0; c < spec.class_count; ++c) {
        char class_name[24];
        std::snprintf(class_name, sizeof(class_name), "class_%02d", c);
        for (int i = 0; i < spec.per_class; ++i) {
            char file_name[32];
            std::snprintf(file_name, sizeof(file_name), "img_%04d.png", i);
            DatasetEntry entry;
            entry.image_path = std::string(class_name) + "/" + file_name;
            entry.class_name = class_name;
            entry.source_tag = "synthetic";
            ds.manifest_.entries.push_back(std::move(entry));
        }
    }
    sort_and_index(ds.manifest_);

    // seed-per-image derivation keeps generation order-independent
    ds.images_.resize(ds.manifest_.entries.size());
    for (std::size_t i = 0; i < ds.manifest_.entries.size(); ++i) {
        const auto& entry = ds.manifest_.entries[i];
        const int c = entry.label;
        const int ordinal = static_cast<int>(i % static_cast<std::size_t>(spec.per_class));
        ds.images_[i] = render_shell(spec, spec.shapes[static_cast<std::size_t>(c)],
                                     derive_seed(spec.seed, static_cast<std::uint64_t>(c),
                                                 static_cast<std::uint64_t>(ordinal)));
    }
    return ds;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> result(manifest_.entries.size());
    for (std::size_t i = 0; i < result.size(); ++i) result[i] = manifest_.entries[i].label;
    return result;
}

RasterImage Dataset::image(std::size_t index) const {
    if (!images_.empty()) return images_[index];
    return png::read_rgba(root_ / manifest_.entries[index].image_path);
}

void Dataset::write_directory(const std::filesystem::path& root) const {
    std::filesystem::create_directories(root);
    std::ofstream csv(root / "manifest.csv");
    if (!csv) throw IoError("cannot write manifest under '" + root.string() + "'");
    csv << "image_path,class_name,source_tag\n";
    for (std::size_t i = 0; i < manifest_.entries.size(); ++i) {
        const auto& entry = manifest_.entries[i];
        const auto path = root / entry.image_path;
        std::filesystem::create_directories(path.parent_path());
        png::write_rgba(path, image(i));
        csv << entry.image_path << ',' << entry.class_name << ',' << entry.source_tag << '\n';
    }
}

std::vector<std::size_t> SplitSpec::all_train() const {
    std::vector<std::size_t> out;
    for (const auto& cls : train) out.insert(out.end(), cls.begin(), cls.end());
    return out;
}
std::vector<std::size_t> SplitSpec::all_val() const {
    std::vector<std::size_t> out;
    for (const auto& cls : val) out.insert(out.end(), cls.begin(), cls.end());
    return out;
}
std::vector<std::size_t> SplitSpec::all_test() const {
    std::vector<std::size_t> out;
    for (const auto& cls : test) out.insert(out.end(), cls.begin(), cls.end());
    return out;
}

void persist_split(const SplitSpec& split, const std::filesystem::path& path,
                   const DatasetManifest& manifest) {
    json doc;
    doc["seed"] = split.seed;
    doc["fingerprint"] = manifest.fingerprint();
    doc["classes"] = manifest.class_names;
    doc["train"] = split.train;
    doc["val"] = split.val;
    doc["test"] = split.test;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write split file '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

SplitSpec load_split(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError("invalid split file '" + path.string() + "': " + e.what());
    }
    if (doc.value("fingerprint", "") != manifest.fingerprint())
        throw FingerprintMismatch("split file '" + path.string() +
                                  "' was made for a different dataset");
    SplitSpec split;
    split.seed = doc.value("seed", std::uint64_t{0});
    split.train = doc.at("train").get<std::vector<std::vector<std::size_t>>>();
    split.val = doc.at("val").get<std::vector<std::vector<std::size_t>>>();
    split.test = doc.at("test").get<std::vector<std::vector<std::size_t>>>();
    return split;
}

} // namespace mve
