#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecont/geometry.hpp"
#include "vecont/ontology.hpp"

namespace vecont {

struct Artist {
  std::string name;
  std::vector<std::string> genres;
};

/// One corpus item. `artist_genres` is the sorted union of all artists' genres.
struct SongRecord {
  std::string id;
  std::string title;
  std::vector<Artist> artists;
  std::vector<std::string> artist_genres;
  FeatureVector features;
};

/// Sorted, de-duplicated union of the artists' genre lists.
std::vector<std::string> union_genres(std::span<const Artist> artists);

enum class CorpusFormat { Jsonl, Csv };

struct RejectedRow {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<SongRecord> records;
  std::vector<RejectedRow> rejected;
};

/// Reads a corpus file. Rows with missing or out-of-domain features (or a
/// repeated id) are rejected and listed; unparseable lines raise ParseError
/// and a missing id/artists field or CSV column raises SchemaError.
IngestResult ingest(const std::filesystem::path& path, CorpusFormat format,
                    std::span<const DimensionDomain> dims);

/// Canonical JSONL, one record per line, feature keys in dimension order.
void write_jsonl(const std::filesystem::path& path, std::span<const SongRecord> records,
                 std::span<const DimensionDomain> dims);

nlohmann::json to_json(const SongRecord& song, std::span<const DimensionDomain> dims);

std::vector<FeatureVector> features_of(std::span<const SongRecord> records);

struct SynthCluster {
  std::string genre;
  std::vector<double> mean;    // native units, one per dimension
  std::vector<double> spread;  // standard deviation per dimension
  double weight = 1.0;
  std::vector<std::string> secondary_labels;  // each added with probability secondary_prob
  double secondary_prob = 0.0;
};

struct SynthSpec {
  std::vector<DimensionDomain> dims;
  std::vector<SynthCluster> clusters;
  std::size_t total_count = 0;
  std::uint64_t seed = 0;
};

/// Fifty genre clusters over the song dimensions.
SynthSpec default_synth_spec(std::size_t total_count = 20000, std::uint64_t seed = 42);

/// Per-cluster counts by largest remainder over the weights.
std::vector<std::size_t> cluster_counts(const SynthSpec& spec);

/// Gaussian clusters truncated to the domain, features rounded to three
/// decimals. Deterministic for a fixed seed.
std::vector<SongRecord> synthesize(const SynthSpec& spec);

/// Per-bin genre counters over a corpus.
class GroundTruthIndex {
 public:
  using GenreCounts = std::map<std::string, std::uint64_t>;

  explicit GroundTruthIndex(Ontology ontology);

  const Ontology& ontology() const noexcept { return ontology_; }
  const std::map<DiscretePosition, GenreCounts>& bins() const noexcept { return bins_; }
  const std::map<DiscretePosition, std::uint64_t>& songs_per_bin() const noexcept { return songs_; }
  std::uint64_t total_songs() const noexcept { return total_; }

  /// Adds one song: every genre in `genres` increments the bin's counter once.
  void add(const DiscretePosition& bin, std::span<const std::string> genres);

  /// Adds pre-aggregated counts for `songs` songs in one bin (deserialization).
  void add_aggregate(const DiscretePosition& bin, const GenreCounts& counts, std::uint64_t songs);

  /// Combines two shards built on the same ontology.
  void merge(const GroundTruthIndex& other);

  std::uint64_t count(const DiscretePosition& bin, const std::string& genre) const;
  bool contains_genre(const std::string& genre) const;
  std::vector<std::string> genres() const;

  bool operator==(const GroundTruthIndex&) const = default;

 private:
  Ontology ontology_;
  std::map<DiscretePosition, GenreCounts> bins_;
  std::map<DiscretePosition, std::uint64_t> songs_;
  std::uint64_t total_ = 0;
};

GroundTruthIndex build_index(const Ontology& ontology, std::span<const SongRecord> corpus);

nlohmann::json to_json(const GroundTruthIndex& index);
GroundTruthIndex index_from_json(const nlohmann::json& j);

struct GenreCentroid {
  std::string genre;
  NormalizedPoint point;
  std::uint64_t weight_total = 0;
};

/// Count-weighted mean of the centers of bins holding `genre`. Bins whose count
/// is below `min_count` are ignored.
GenreCentroid genre_centroid(const GroundTruthIndex& index, const std::string& genre,
                             std::uint64_t min_count = 0);

struct Extent2 {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
};

/// Mean genre count per grid cell over projected bin centers. A cell with no
/// projected bin is empty (nullopt), distinct from a cell whose bins have count 0.
struct HeatmapGrid {
  int size = 0;
  Extent2 extent;
  std::vector<std::optional<double>> cells;  // row-major: cells[row * size + col], row = y
  std::vector<int> bins_per_cell;

  const std::optional<double>& at(int row, int col) const { return cells[row * size + col]; }
};

/// Projects every bin of the index (count 0 where the genre is absent). When
/// `extent` is omitted it spans the projected bin centers.
HeatmapGrid heatmap_grid(const GroundTruthIndex& index, const std::string& genre,
                         const PcaModel& projector, int grid,
                         std::optional<Extent2> extent = std::nullopt);

nlohmann::json to_json(const HeatmapGrid& grid);

/// Songs of a corpus grouped by bin; member lists are ordered by song id so
/// sampling does not depend on corpus order.
class BinMembership {
 public:
  BinMembership(const Ontology& ontology, std::span<const SongRecord> corpus);

  std::span<const std::size_t> members(const DiscretePosition& bin) const;
  std::size_t bin_count() const noexcept { return members_.size(); }

 private:
  std::map<DiscretePosition, std::vector<std::size_t>> members_;
};

struct SongSample {
  std::vector<std::size_t> songs;  // indices into the corpus
  bool empty_bin = false;
};

/// Uniform sample without replacement of min(cap, population) songs.
SongSample sample_songs(const BinMembership& membership, const DiscretePosition& bin,
                        std::size_t cap, std::uint64_t seed);

}  // namespace vecont
