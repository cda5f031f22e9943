#include "conn/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace conn {

namespace {

std::vector<unsigned char> read_binary_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IdxTruncatedError(std::string(what) + ": cannot open " + path);
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t read_u32_be(const std::vector<unsigned char>& bytes, std::size_t offset,
                          const char* what) {
    if (offset + 4 > bytes.size()) {
        throw IdxTruncatedError(std::string(what) + ": truncated header");
    }
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

constexpr std::uint32_t kImagesMagic = 0x00000803u;
constexpr std::uint32_t kLabelsMagic = 0x00000801u;

}  // namespace

LabeledDataset read_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_binary_file(images_path, "idx images");
    const std::uint32_t img_magic = read_u32_be(img, 0, "idx images");
    if (img_magic != kImagesMagic) {
        std::ostringstream msg;
        msg << "idx images: bad magic 0x" << std::hex << img_magic;
        throw IdxMagicError(msg.str());
    }
    const std::uint32_t count = read_u32_be(img, 4, "idx images");
    const std::uint32_t rows = read_u32_be(img, 8, "idx images");
    const std::uint32_t cols = read_u32_be(img, 12, "idx images");
    if (rows == 0 || cols == 0) {
        throw IdxError("idx images: zero image dimensions");
    }
    const std::size_t pixel_count = std::size_t(count) * rows * cols;
    if (img.size() < 16 + pixel_count) {
        throw IdxTruncatedError("idx images: truncated pixel data");
    }
    if (img.size() > 16 + pixel_count) {
        throw IdxError("idx images: trailing bytes after pixel data");
    }

    const auto lab = read_binary_file(labels_path, "idx labels");
    const std::uint32_t lab_magic = read_u32_be(lab, 0, "idx labels");
    if (lab_magic != kLabelsMagic) {
        std::ostringstream msg;
        msg << "idx labels: bad magic 0x" << std::hex << lab_magic;
        throw IdxMagicError(msg.str());
    }
    const std::uint32_t lab_count = read_u32_be(lab, 4, "idx labels");
    if (lab.size() < 8 + std::size_t(lab_count)) {
        throw IdxTruncatedError("idx labels: truncated label data");
    }
    if (lab.size() > 8 + std::size_t(lab_count)) {
        throw IdxError("idx labels: trailing bytes after label data");
    }
    if (lab_count != count) {
        std::ostringstream msg;
        msg << "idx: image count " << count << " != label count " << lab_count;
        throw IdxCountError(msg.str());
    }
    if (count == 0) {
        throw IdxError("idx: empty dataset");
    }

    LabeledDataset out;
    out.samples.reserve(count);
    out.labels.reserve(count);
    const std::vector<std::size_t> shape{rows, cols};
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        RealVector v(std::size_t(rows) * cols);
        v.shape = shape;
        const std::size_t base = 16 + std::size_t(i) * rows * cols;
        for (std::size_t p = 0; p < std::size_t(rows) * cols; ++p) {
            v[p] = double(img[base + p]) / 255.0;
        }
        out.samples.push_back(std::move(v));
        const int label = int(lab[8 + i]);
        max_label = std::max(max_label, label);
        out.labels.push_back(label);
    }
    out.class_count = max_label + 1;
    validate_dataset(out);
    return out;
}

LabeledDataset restricted_subset(const LabeledDataset& dataset, int per_class, RngStream& rng) {
    validate_dataset(dataset);
    if (per_class < 1) {
        throw std::invalid_argument("restricted_subset: per_class must be >= 1");
    }
    std::vector<std::vector<std::size_t>> by_class(dataset.class_count);
    for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
        by_class[dataset.labels[i]].push_back(i);
    }
    LabeledDataset out;
    out.class_count = dataset.class_count;
    for (int c = 0; c < dataset.class_count; ++c) {
        auto& pool = by_class[c];
        if (pool.size() < std::size_t(per_class)) {
            std::ostringstream msg;
            msg << "restricted_subset: class " << c << " has " << pool.size()
                << " samples, need " << per_class;
            throw std::invalid_argument(msg.str());
        }
        for (int i = 0; i < per_class; ++i) {
            const std::int64_t j = rng.uniform_int_range(i, std::int64_t(pool.size()) - 1);
            std::swap(pool[std::size_t(i)], pool[std::size_t(j)]);
        }
        std::sort(pool.begin(), pool.begin() + per_class);
        for (int i = 0; i < per_class; ++i) {
            out.samples.push_back(dataset.samples[pool[std::size_t(i)]]);
            out.labels.push_back(c);
        }
    }
    return out;
}

namespace {

// 8x8 binary prototypes; '#' = 1. Any two differ in at least 4 pixels.
const char* const kGlyphRows[8][8] = {
    // 0: horizontal bar
    {"........", "........", "........", "########", "########", "........", "........",
     "........"},
    // 1: vertical bar
    {"...##...", "...##...", "...##...", "...##...", "...##...", "...##...", "...##...",
     "...##..."},
    // 2: plus
    {"...##...", "...##...", "...##...", "########", "########", "...##...", "...##...",
     "...##..."},
    // 3: diagonal stroke
    {"#.......", "##......", ".##.....", "..##....", "...##...", "....##..", ".....##.",
     "......##"},
    // 4: frame
    {"########", "#......#", "#......#", "#......#", "#......#", "#......#", "#......#",
     "########"},
    // 5: opposite corner blocks
    {"###.....", "###.....", "###.....", "........", "........", ".....###", ".....###",
     ".....###"},
    // 6: checkerboard of 2x2 blocks
    {"##..##..", "##..##..", "..##..##", "..##..##", "##..##..", "##..##..", "..##..##",
     "..##..##"},
    // 7: diamond
    {"...##...", "..####..", ".######.", "########", "########", ".######.", "..####..",
     "...##..."},
};

constexpr int kGlyphSide = 8;

}  // namespace

RealVector glyph_prototype(int class_id) {
    if (class_id < 0 || class_id >= 8) {
        throw std::invalid_argument("glyph_prototype: class_id must be in [0, 8)");
    }
    RealVector v(std::size_t(kGlyphSide) * kGlyphSide);
    v.shape = {std::size_t(kGlyphSide), std::size_t(kGlyphSide)};
    for (int r = 0; r < kGlyphSide; ++r) {
        for (int c = 0; c < kGlyphSide; ++c) {
            v[std::size_t(r) * kGlyphSide + c] = kGlyphRows[class_id][r][c] == '#' ? 1.0 : 0.0;
        }
    }
    return v;
}

LabeledDataset synth_glyphs(int class_count, int per_class, RngStream& rng, double jitter) {
    if (class_count < 1 || class_count > 8) {
        throw std::invalid_argument("synth_glyphs: class_count must be in [1, 8]");
    }
    if (per_class < 1) {
        throw std::invalid_argument("synth_glyphs: per_class must be >= 1");
    }
    if (!(jitter >= 0.0) || jitter > 0.5) {
        throw std::invalid_argument("synth_glyphs: jitter must be in [0, 0.5]");
    }
    LabeledDataset out;
    out.class_count = class_count;
    for (int c = 0; c < class_count; ++c) {
        const RealVector proto = glyph_prototype(c);
        for (int s = 0; s < per_class; ++s) {
            RealVector v = proto;
            for (std::size_t p = 0; p < v.dim(); ++p) {
                const double noise = jitter * (2.0 * rng.uniform() - 1.0);
                v[p] = std::min(1.0, std::max(0.0, v[p] + noise));
            }
            out.samples.push_back(std::move(v));
            out.labels.push_back(c);
        }
    }
    return out;
}

void write_pgm(const RealVector& image, const std::string& path) {
    validate(image, "write_pgm");
    if (image.shape.size() != 2) {
        throw std::invalid_argument("write_pgm: image must have a 2-D shape");
    }
    const std::size_t h = image.shape[0];
    const std::size_t w = image.shape[1];
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_pgm: cannot open " + path);
    }
    out << "P5\n" << w << " " << h << "\n255\n";
    for (std::size_t p = 0; p < image.dim(); ++p) {
        const double v = std::min(1.0, std::max(0.0, image[p]));
        const unsigned char byte = static_cast<unsigned char>(std::lround(v * 255.0));
        out.put(char(byte));
    }
    if (!out) {
        throw std::runtime_error("write_pgm: write failed for " + path);
    }
}

namespace {

// Next PGM header token, skipping whitespace and # comments.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    while (ch != EOF && !std::isspace(ch) && ch != '#') {
        tok.push_back(char(ch));
        ch = in.get();
    }
    if (ch == '#') in.unget();
    return tok;
}

std::size_t parse_pgm_size(const std::string& tok, const char* what) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw std::runtime_error(std::string("read_pgm: malformed ") + what);
    }
    return std::stoull(tok);
}

}  // namespace

RealVector read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_pgm: cannot open " + path);
    }
    if (next_pgm_token(in) != "P5") {
        throw std::runtime_error("read_pgm: not a binary PGM (P5) file: " + path);
    }
    const std::size_t w = parse_pgm_size(next_pgm_token(in), "width");
    const std::size_t h = parse_pgm_size(next_pgm_token(in), "height");
    const std::size_t maxval = parse_pgm_size(next_pgm_token(in), "maxval");
    if (w == 0 || h == 0) {
        throw std::runtime_error("read_pgm: zero image dimensions");
    }
    if (maxval != 255) {
        throw std::runtime_error("read_pgm: only maxval 255 is supported");
    }
    // Exactly one whitespace byte separates the header from the raster.
    std::vector<char> raster(w * h);
    in.read(raster.data(), std::streamsize(raster.size()));
    if (std::size_t(in.gcount()) != raster.size()) {
        throw std::runtime_error("read_pgm: truncated raster");
    }
    RealVector img(w * h);
    img.shape = {h, w};
    for (std::size_t p = 0; p < img.dim(); ++p) {
        img[p] = double(static_cast<unsigned char>(raster[p])) / 255.0;
    }
    return img;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

const std::string* ConfigDoc::find(const std::string& section, const std::string& key) const {
    for (const auto& sec : sections) {
        if (sec.name != section) continue;
        for (const auto& kv : sec.entries) {
            if (kv.first == key) return &kv.second;
        }
    }
    return nullptr;
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

void ConfigDoc::set(const std::string& section, const std::string& key,
                    const std::string& value) {
    for (auto& sec : sections) {
        if (sec.name != section) continue;
        for (auto& kv : sec.entries) {
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        }
        sec.entries.emplace_back(key, value);
        return;
    }
    sections.push_back(Section{section, {{key, value}}});
}

ConfigDoc parse_config(const std::string& text) {
    ConfigDoc doc;
    ConfigDoc::Section* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty section name");
            }
            for (const auto& sec : doc.sections) {
                if (sec.name == name) {
                    throw ConfigError("config line " + std::to_string(line_no) +
                                      ": duplicate section [" + name + "]");
                }
            }
            doc.sections.push_back(ConfigDoc::Section{name, {}});
            current = &doc.sections.back();
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (current == nullptr) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside any [section]");
        }
        for (const auto& kv : current->entries) {
            if (kv.first == key) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": duplicate key '" + key + "' in [" + current->name + "]");
            }
        }
        current->entries.emplace_back(key, value);
    }
    return doc;
}

std::string serialize_config(const ConfigDoc& doc) {
    std::string out;
    bool first = true;
    for (const auto& sec : doc.sections) {
        if (!first) out += "\n";
        first = false;
        out += "[" + sec.name + "]\n";
        for (const auto& kv : sec.entries) {
            out += kv.first + " = " + kv.second + "\n";
        }
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

}  // namespace conn
