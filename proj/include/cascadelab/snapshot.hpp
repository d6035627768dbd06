#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "cascadelab/engine.hpp"
#include "cascadelab/records.hpp"

namespace cascadelab {

// MCAS1 layout, all integers little-endian:
//
//   "MCAS1"                     5-byte format tag
//   u32 header_length
//   header                      UTF-8 JSON: ell, depth, cells, model, seed,
//                               replica, total_mass, digest (SHA-256 hex)
//   f64[cells]                  log-densities in lexicographic cell order,
//                               -infinity for zero cells
//   u8[ceil(cells / 8)]         zero bitmap, bit (i % 8) of byte i / 8
//
// The digest covers the value and bitmap sections.
inline constexpr std::string_view kSnapshotMagic = "MCAS1";

struct SnapshotMetadata {
  int ell = 2;
  int depth = 0;
  std::string model_descriptor;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  double total_mass = 0.0;
  std::string digest;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Bytes of the value and bitmap sections for a level.
std::vector<std::uint8_t> encode_payload(const LevelMassArray& level);

/// SHA-256 of encode_payload(level).
std::string payload_digest(const LevelMassArray& level);

/// Writes through a temporary file and renames it into place. Throws IoFailure.
SnapshotMetadata save_snapshot(const LevelMassArray& level, const std::filesystem::path& destination);

/// Throws BadMagic, TruncatedPayload, DigestMismatch or IoFailure.
LevelMassArray load_snapshot(const std::filesystem::path& source);
SnapshotMetadata read_snapshot_metadata(const std::filesystem::path& source);

// CSV exports. Fixed headers; floats use 17 significant digits so a
// binary64 value survives the text round trip.
std::string format_double(double value);

std::string to_csv(const StructureFunctionTable& table);
std::string to_csv(const SpectrumEstimate& spectrum);
std::string to_csv(const MartingaleTrace& trace);
std::string to_csv(std::span<const MassStatistics> rows);

void export_csv(const StructureFunctionTable& table, const std::filesystem::path& destination);
void export_csv(const SpectrumEstimate& spectrum, const std::filesystem::path& destination);
void export_csv(const MartingaleTrace& trace, const std::filesystem::path& destination);
void export_csv(const MassStatistics& stats, const std::filesystem::path& destination);
void export_csv(std::span<const MassStatistics> rows, const std::filesystem::path& destination);

/// Atomic text write (temporary file + rename). Throws IoFailure.
void write_file_atomic(const std::filesystem::path& destination, std::string_view contents);

}  // namespace cascadelab
