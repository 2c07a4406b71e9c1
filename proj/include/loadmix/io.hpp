#pragma once

#include "loadmix/collection.hpp"
#include "loadmix/dataset.hpp"
#include "loadmix/mixture.hpp"
#include "loadmix/slope.hpp"
#include "loadmix/synth.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace loadmix::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// `# key=value` lines opening every text artifact.
using Provenance = std::vector<std::pair<std::string, std::string>>;

void write_provenance(std::ostream& out, const Provenance& header);

/// Reads the leading `#` lines of `in` into key/value pairs and leaves the
/// stream at the first non-comment line (returned through `first_line`).
Provenance read_provenance(std::istream& in, std::string& first_line);

/// Lookup in a provenance block; empty string when absent.
std::string provenance_value(const Provenance& header, const std::string& key);

/// UTC time in ISO 8601, seconds resolution.
std::string utc_timestamp();

void write_text_file(const fs::path& path, const std::string& content);

// Feature datasets -------------------------------------------------------

/// Columns: row, consumer, eve_date, day_date, eve_weekday, day_weekday,
/// x_1..x_p, y_1..y_q, then eve_h00..eve_h47, day_h00..day_h47 when the
/// dataset carries raw curves. Rows are numbered from 1.
void write_features(std::ostream& out, const RegressionDataset& data, const Provenance& header);
void write_features(const fs::path& path, const RegressionDataset& data, const Provenance& header);

RegressionDataset read_features(std::istream& in, Provenance* header = nullptr);
RegressionDataset read_features(const fs::path& path, Provenance* header = nullptr);

// Models and collections ---------------------------------------------------

Json params_to_json(const mixture::MixtureParams& params);
mixture::MixtureParams params_from_json(const Json& j);

/// Support positions are written 1-based as [response, regressor] pairs.
Json support_to_json(const mixture::Support& support);
mixture::Support support_from_json(const Json& j);

Json entry_to_json(const collection::ModelEntry& entry);
collection::ModelEntry entry_from_json(const Json& j);

/// Writes collection.jsonl, collection-meta.json and collection-summary.csv
/// into `dir`.
void write_collection(const fs::path& dir, const collection::ModelCollection& c,
                      const Provenance& header);

/// Reads collection.jsonl (path to the file or its directory) and its sibling
/// collection-meta.json.
collection::ModelCollection read_collection(const fs::path& path);

Json selection_to_json(const slope::SelectionResult& result, const collection::ModelCollection& c,
                       const Provenance& header);

// Generator specs -----------------------------------------------------------

/// x_law "resample" needs `fixture_x`; it is not serialised (the CLI reads the
/// fixture path from the "fixture" key).
synth::GeneratorSpec generator_from_json(const Json& j);
Json generator_to_json(const synth::GeneratorSpec& spec);

Json read_json(const fs::path& path);

} // namespace loadmix::io
