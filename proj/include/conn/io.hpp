#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "conn/classifiers.hpp"
#include "conn/real_vector.hpp"
#include "conn/rng.hpp"

namespace conn {

struct IdxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IdxMagicError : IdxError {
    using IdxError::IdxError;
};
struct IdxTruncatedError : IdxError {
    using IdxError::IdxError;
};
struct IdxCountError : IdxError {
    using IdxError::IdxError;
};

// IDX image/label pair: big-endian magics 0x00000803 and 0x00000801, byte
// pixels scaled to [0,1] (shape {rows, cols}), byte labels. class_count is
// max label + 1. Raises IdxMagicError, IdxTruncatedError or IdxCountError.
LabeledDataset read_idx(const std::string& images_path, const std::string& labels_path);

// Exactly per_class samples per class, chosen without replacement (one
// partial Fisher-Yates per class, classes in ascending order, selected
// indices re-sorted ascending). Throws std::invalid_argument when a class
// is smaller than per_class.
LabeledDataset restricted_subset(const LabeledDataset& dataset, int per_class, RngStream& rng);

// Desk dataset: 8x8 binary glyph prototypes (class_count <= 8) plus
// componentwise uniform jitter in +-jitter, clamped to [0,1]. Prototype
// pairs differ in at least 4 pixels, so inter-class prototype distance is
// >= 2 in raw L2. jitter = 0 yields the prototypes exactly.
LabeledDataset synth_glyphs(int class_count, int per_class, RngStream& rng,
                            double jitter = 0.05);

// The raw 8x8 prototype of one glyph class.
RealVector glyph_prototype(int class_id);

// Binary PGM (P5, maxval 255); requires a 2-D shape. Pixel byte =
// round(clamp(v,0,1)*255).
void write_pgm(const RealVector& image, const std::string& path);
RealVector read_pgm(const std::string& path);

// Malformed configuration text or values. Derives from invalid_argument so
// the CLI can map it to a usage error.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Ordered sectioned key=value document:
//   [section]
//   key = value
// Full-line # comments; duplicate sections or duplicate keys in a section
// are rejected at parse time.
struct ConfigDoc {
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::vector<Section> sections;

    const std::string* find(const std::string& section, const std::string& key) const;
    bool has(const std::string& section, const std::string& key) const;
    // Replaces the existing value or appends (creating the section if new).
    void set(const std::string& section, const std::string& key, const std::string& value);
};

ConfigDoc parse_config(const std::string& text);

// Canonical text: one [section] header per section, "key = value" lines,
// one blank line between sections. parse_config(serialize_config(d))
// reproduces d.
std::string serialize_config(const ConfigDoc& doc);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace conn
