#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "polchan/channel.hpp"
#include "polchan/crystal.hpp"
#include "polchan/reachability.hpp"
#include "polchan/sbc.hpp"
#include "polchan/tomography.hpp"

namespace polchan::io {

using json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Row-major array of [re, im] pairs.
json complex_matrix_to_json(const Eigen::MatrixXcd& m);
/// InvalidArgument unless `j` is a rows x cols array of [re, im] pairs.
Eigen::MatrixXcd complex_matrix_from_json(const json& j, int rows, int cols);

/// {"basis": "pauli", "matrix": [...]}.
json chi_to_json(const ProcessMatrix& chi);
/// Parses and validates a process matrix document.
ProcessMatrix chi_from_json(const json& j);

json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const json& j);

json stokes_to_json(const StokesVector& s);
json dvector_to_json(const DVector& d);
DVector dvector_from_json(const json& j);

json angles_to_json(const WavePlateAngles& angles);

json crystal_stack_to_json(const CrystalStack& stack);
/// Missing keys keep their defaults from CrystalStack::standard().
CrystalStack crystal_stack_from_json(const json& j);

json sbc_geometry_to_json(const SbcGeometry& geometry);
SbcGeometry sbc_geometry_from_json(const json& j);

json wave_packet_to_json(const WavePacket& packet);
WavePacket wave_packet_from_json(const json& j);

json acquisition_to_json(const AcquisitionConfig& config);
json mle_options_to_json(const MleOptions& options);

json tomography_result_to_json(const TomographyResult& result);

json sweep_metadata(const ReachabilityCloud& cloud);

/// Header `input,projector,mode,integration_s,counts`.
void write_count_records(std::ostream& out, const std::vector<CountRecord>& records);
std::vector<CountRecord> read_count_records(std::istream& in);

/// Header `d1,d2,d3`.
void write_cloud_csv(std::ostream& out, const std::vector<DVector>& points);
std::vector<DVector> read_cloud_csv(std::istream& in);

/// Header `theta1_deg,eig0,eig1,eig2,eig3,p_analytic`.
void write_locus_csv(std::ostream& out, const std::vector<LocusPoint>& points);
std::vector<LocusPoint> read_locus_csv(std::istream& in);

/// Header `t_fs,value`.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points);
std::vector<CurvePoint> read_curve_csv(std::istream& in);

/// Reads a whole file; InvalidArgument if it cannot be opened.
std::string read_file(const std::string& path);
json read_json_file(const std::string& path);

}  // namespace polchan::io
