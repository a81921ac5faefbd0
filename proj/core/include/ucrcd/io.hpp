#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ucrcd/types.hpp"

namespace ucrcd {

/// Expected shape of an input CSV.
struct CsvLayout {
  std::string year_column = "year";
  std::string incumbent_column = "incumbent";
  std::string entrant_column = "entrant";
  char delimiter = ',';
  /// Pre-launch entrant values below this are rounding noise and read as 0.
  double zero_tolerance = 1e-9;
};

/// Reads `year,incumbent,entrant`. c2 is the index of the first year whose
/// entrant value is positive (i.e. the model time at the end of the year
/// before), unless `c2_override` is given. Throws ParseError.
DuopolyDataset read_dataset(const std::filesystem::path& path, const CsvLayout& layout = {},
                            std::optional<int> c2_override = std::nullopt);

/// The dataset in the read_dataset layout with round-trip precision.
std::string format_dataset_csv(const DuopolyDataset& dataset);
void write_dataset(const std::filesystem::path& path, const DuopolyDataset& dataset);

/// Reads a two-column `year,<label>` CSV for Bass fits. Throws ParseError.
AnnualSeries read_series(const std::filesystem::path& path, char delimiter = ',');

void write_series(const std::filesystem::path& path, const AnnualSeries& series);

/// Columns time, z1_inst, z2_inst, z1_cum, z2_cum.
std::string format_trajectory_csv(const Trajectory& trajectory);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

/// Simulates `years` annual observations and adds seeded Gaussian noise with
/// standard deviation noise_sigma_fraction x the series maximum. Pre-launch
/// entrant values stay exactly zero; noisy values are clipped at 0.
DuopolyDataset synth_dataset(const UcrcdParams& params, int c2, int years,
                             double noise_sigma_fraction, std::uint64_t seed,
                             int start_year = 1965);

}  // namespace ucrcd
