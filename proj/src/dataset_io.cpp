#include "pivio/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pivio {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << content;
}

std::vector<double> parse_row(const std::string& line, const std::filesystem::path& file,
                              int line_no, size_t expected) {
  std::vector<double> out;
  out.reserve(expected);
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw DatasetError("parse error at " + file.filename().string() + ":" +
                         std::to_string(line_no) + ": bad number '" + cell + "'");
    }
    if (used != cell.size()) {
      throw DatasetError("parse error at " + file.filename().string() + ":" +
                         std::to_string(line_no) + ": trailing characters in '" + cell + "'");
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw DatasetError("parse error at " + file.filename().string() + ":" +
                       std::to_string(line_no) + ": expected " + std::to_string(expected) +
                       " columns, got " + std::to_string(out.size()));
  }
  return out;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& file,
                                          size_t expected_cols) {
  std::ifstream in(file);
  if (!in) throw DatasetError("cannot read " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) continue;  // header
    if (line.empty()) continue;
    rows.push_back(parse_row(line, file, line_no, expected_cols));
  }
  return rows;
}

}  // namespace

void write_dataset(const SimDataset& data, const std::filesystem::path& dir,
                   const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);

  {
    std::string csv = "t,wx,wy,wz,ax,ay,az\n";
    for (const ImuSampled& s : data.imu) {
      csv += fmt(s.timestamp);
      for (int i = 0; i < 3; ++i) csv += "," + fmt(s.gyro(i));
      for (int i = 0; i < 3; ++i) csv += "," + fmt(s.accel(i));
      csv += "\n";
    }
    write_file(dir / "imu.csv", csv);
  }

  {
    std::string csv =
        "t,r00,r01,r02,r10,r11,r12,r20,r21,r22,px,py,pz,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz\n";
    for (size_t k = 0; k < data.ground_truth.size(); ++k) {
      const NavStated& x = data.ground_truth[k];
      csv += fmt(data.keyframe_times[k]);
      const Mat3d& r = x.rotation.matrix();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) csv += "," + fmt(r(i, j));
      for (int i = 0; i < 3; ++i) csv += "," + fmt(x.position(i));
      for (int i = 0; i < 3; ++i) csv += "," + fmt(x.velocity(i));
      for (int i = 0; i < 3; ++i) csv += "," + fmt(x.bias.gyro(i));
      for (int i = 0; i < 3; ++i) csv += "," + fmt(x.bias.accel(i));
      csv += "\n";
    }
    write_file(dir / "keyframes.csv", csv);
  }

  {
    std::string csv = "landmark_id,keyframe_id,u,v\n";
    for (const LandmarkTrack& t : data.tracks) {
      for (const TrackObservation& o : t.observations) {
        csv += std::to_string(t.landmark_id) + "," + std::to_string(o.keyframe_id) + "," +
               fmt(o.pixel(0)) + "," + fmt(o.pixel(1)) + "\n";
      }
    }
    write_file(dir / "tracks.csv", csv);
  }

  {
    std::string csv = "id,x,y,z\n";
    for (size_t l = 0; l < data.landmarks.size(); ++l) {
      csv += std::to_string(l);
      for (int i = 0; i < 3; ++i) csv += "," + fmt(data.landmarks[l](i));
      csv += "\n";
    }
    write_file(dir / "landmarks.csv", csv);
  }

  write_file(dir / "config.json", config_echo.dump(2) + "\n");
}

SimDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream cfg(dir / "config.json");
  if (!cfg) throw DatasetError("cannot read " + (dir / "config.json").string());
  nlohmann::json j;
  try {
    cfg >> j;
  } catch (const std::exception& e) {
    throw DatasetError("parse error in config.json: " + std::string(e.what()));
  }
  RunConfig config = parse_config(j);

  SimDataset data;
  data.config = config.sim;

  for (const auto& row : read_csv(dir / "keyframes.csv", 22)) {
    data.keyframe_times.push_back(row[0]);
    NavStated x;
    Mat3d r;
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj) r(i, jj) = row[1 + 3 * i + jj];
    x.rotation = Rotationd(r);
    x.position = Vec3d(row[10], row[11], row[12]);
    x.velocity = Vec3d(row[13], row[14], row[15]);
    x.bias.gyro = Vec3d(row[16], row[17], row[18]);
    x.bias.accel = Vec3d(row[19], row[20], row[21]);
    data.ground_truth.push_back(x);
  }
  if (data.ground_truth.empty()) throw DatasetError("keyframes.csv: no keyframes");

  for (const auto& row : read_csv(dir / "imu.csv", 7)) {
    ImuSampled s;
    s.timestamp = row[0];
    s.gyro = Vec3d(row[1], row[2], row[3]);
    s.accel = Vec3d(row[4], row[5], row[6]);
    data.imu.push_back(s);
  }
  data.imu_dt.resize(data.imu.size());
  for (size_t k = 0; k + 1 < data.imu.size(); ++k) {
    data.imu_dt[k] = data.imu[k + 1].timestamp - data.imu[k].timestamp;
    if (!(data.imu_dt[k] > 0.0)) throw DatasetError("imu.csv: non-increasing timestamps");
  }
  if (!data.imu.empty()) {
    data.imu_dt.back() = data.keyframe_times.back() - data.imu.back().timestamp;
    if (!(data.imu_dt.back() > 0.0)) {
      throw DatasetError("imu.csv: stream does not end before the last keyframe");
    }
  }

  for (const auto& row : read_csv(dir / "landmarks.csv", 4)) {
    data.landmarks.push_back(Vec3d(row[1], row[2], row[3]));
  }

  std::map<long, LandmarkTrack> by_id;
  for (const auto& row : read_csv(dir / "tracks.csv", 4)) {
    const long id = static_cast<long>(row[0]);
    const int kf = static_cast<int>(row[1]);
    if (kf < 0 || kf >= static_cast<int>(data.ground_truth.size())) {
      throw DatasetError("tracks.csv: keyframe_id out of range");
    }
    LandmarkTrack& t = by_id[id];
    t.landmark_id = id;
    t.observations.push_back({kf, Eigen::Vector2d(row[2], row[3]),
                              std::max(data.config.pixel_sigma, 1e-6)});
  }
  for (auto& [id, t] : by_id) data.tracks.push_back(std::move(t));
  return data;
}

}  // namespace pivio
