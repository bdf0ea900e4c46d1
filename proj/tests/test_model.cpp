// Copyright 2026 The gazecheck Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "gazecheck/model.hpp"
#include "support.hpp"

using namespace gazecheck;
using gazecheck::testing::error_code;

namespace {

SampleRecord rec(std::string id, double gp = 1.0, double gy = 2.0) {
  SampleRecord r;
  r.sample_id = std::move(id);
  r.participant_id = "p0";
  r.gaze_code = std::vector<double>{0.1, -0.2};
  r.pose_code = std::vector<double>(kPoseCodeDim, 0.05);
  r.gaze_label = {gp, gy};
  r.pose_label = {-3.0, 4.5};
  return r;
}

Dataset three() {
  Dataset ds;
  ds.records = {rec("s1"), rec("s2", -10.0, 44.0), rec("s3", 50.0, -0.5)};
  return ds;
}

}  // namespace

TEST(Model, ValidDatasetPassesThrough) {
  Dataset ds = three();
  Dataset v = validate_dataset(ds);
  EXPECT_EQ(v.records, ds.records);
  EXPECT_TRUE(v.meta.has_gaze_codes);
  EXPECT_TRUE(v.meta.has_pose_codes);
}

TEST(Model, DuplicateIdRejected) {
  Dataset ds = three();
  ds.records[2].sample_id = "s1";
  std::string detail;
  EXPECT_EQ(error_code([&] { validate_dataset(ds); }, &detail), ErrorCode::DuplicateId);
  EXPECT_EQ(detail, "s1");
}

TEST(Model, BadCodeDimRejected) {
  Dataset ds = three();
  ds.records[1].gaze_code = std::vector<double>{1, 2, 3};
  std::string detail;
  EXPECT_EQ(error_code([&] { validate_dataset(ds); }, &detail), ErrorCode::BadCodeDim);
  EXPECT_NE(detail.find("s2"), std::string::npos);
  EXPECT_NE(detail.find("expected 2"), std::string::npos);
  EXPECT_NE(detail.find("actual 3"), std::string::npos);

  ds.records[1].gaze_code.reset();
  ds.records[1].pose_code = std::vector<double>(3, 0.0);
  EXPECT_EQ(error_code([&] { validate_dataset(ds); }), ErrorCode::BadCodeDim);
}

TEST(Model, NonFiniteAngleRejected) {
  Dataset ds = three();
  ds.records[0].pose_label.yaw = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(error_code([&] { validate_dataset(ds); }), ErrorCode::NonFiniteAngle);
  ds.records[0].pose_label.yaw = 0.0;
  ds.records[0].gaze_label.pitch = std::numeric_limits<double>::infinity();
  EXPECT_EQ(error_code([&] { validate_dataset(ds); }), ErrorCode::NonFiniteAngle);
}

TEST(Model, ValidateIsIdempotentAndCanonicalizesZero) {
  Dataset ds = three();
  ds.records[0].gaze_label.pitch = -0.0;
  ds.records[1].gaze_code.reset();
  Dataset once = validate_dataset(ds);
  EXPECT_FALSE(std::signbit(once.records[0].gaze_label.pitch));
  EXPECT_FALSE(once.meta.has_gaze_codes);
  EXPECT_EQ(validate_dataset(once), once);
}

TEST(Model, OutliersAreFlaggedNotRejected) {
  Dataset v = validate_dataset(three());
  EXPECT_TRUE(is_outlier(v.records[2].gaze_label));
  EXPECT_FALSE(is_outlier(v.records[0].gaze_label));
  EXPECT_FALSE(is_outlier({-45.0, 45.0}));
}

TEST(Model, DatasetFileRoundTrip) {
  Dataset ds = three();
  ds.records[1].pose_code.reset();
  ds.records[2].gaze_label = {0.1 + 0.2, -1.0 / 3.0};
  std::stringstream io;
  write_dataset(io, ds, "first line\nsecond line");
  Dataset back = read_dataset(io);
  EXPECT_EQ(back.records, ds.records);
}

TEST(Model, ReadsEmbedderNdjson) {
  std::istringstream in(
      "# written by the embedder\n"
      R"({"sample_id":"a","participant_id":"p1","gaze_code":[0.5,-0.25],"pose_code":null,)"
      R"("gaze_pitch":3.5,"gaze_yaw":-7,"pose_pitch":0,"pose_yaw":1.25})"
      "\n\n"
      R"({"sample_id":"b","participant_id":"p1","gaze_code":null,"pose_code":null,)"
      R"("gaze_pitch":-1,"gaze_yaw":2,"pose_pitch":3,"pose_yaw":4})"
      "\n");
  Dataset ds = read_dataset(in);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(*ds.records[0].gaze_code, (std::vector<double>{0.5, -0.25}));
  EXPECT_FALSE(ds.records[0].pose_code);
  EXPECT_EQ(ds.records[0].gaze_label, (AnglePair{3.5, -7.0}));
  EXPECT_TRUE(ds.records[1].angles_only());
  EXPECT_FALSE(ds.meta.has_gaze_codes);
}

TEST(Model, MalformedLineIsParseError) {
  std::istringstream in(R"({"sample_id":"a","gaze_pitch":1})" "\n");
  std::string detail;
  EXPECT_EQ(error_code([&] { read_dataset(in, "bad.ndjson"); }, &detail), ErrorCode::ParseError);
  EXPECT_EQ(detail.rfind("bad.ndjson:1", 0), 0u);
}

TEST(Model, DigestBitOrderIsMsbFirst) {
  Digest d(10);
  d.set_bit(0, true);
  d.set_bit(9, true);
  ASSERT_EQ(d.bytes().size(), 2u);
  EXPECT_EQ(d.bytes()[0], 0x80);
  EXPECT_EQ(d.bytes()[1], 0x40);
  EXPECT_TRUE(d.bit(9));
  EXPECT_FALSE(d.bit(8));
  Digest e(10, Bytes{0x80, 0x00});
  EXPECT_EQ(d.hamming(e), 1u);
  EXPECT_EQ(error_code([] { Digest(10, Bytes{0x00, 0x01}); }), ErrorCode::InvalidArgument);
}

TEST(Model, ChannelNames) {
  for (Channel c : {Channel::Gaze, Channel::Pose, Channel::Both}) {
    EXPECT_EQ(parse_channel(to_string(c)), c);
  }
  EXPECT_EQ(error_code([] { parse_channel("appearance"); }), ErrorCode::InvalidArgument);
}
