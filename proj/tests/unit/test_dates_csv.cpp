#include <cmath>

#include <gtest/gtest.h>

#include "fomc/csv.hpp"
#include "fomc/dates.hpp"
#include "fomc/digest.hpp"
#include "fomc/error.hpp"
#include "golden.hpp"

using namespace fomc;

TEST(Date, RoundTripsIso) {
  EXPECT_EQ(Date::parse("2008-12-16").iso(), "2008-12-16");
  EXPECT_EQ(Date(2000, 2, 29).next_day().iso(), "2000-03-01");
  EXPECT_LT(Date::parse("2007-02-27"), Date::parse("2007-02-28"));
}

TEST(Date, RejectsMalformedText) {
  EXPECT_THROW(Date::parse("2007-2-27"), ValidationError);
  EXPECT_THROW(Date::parse("2007-02-30"), ValidationError);
  EXPECT_THROW(Date::parse("2007/02/27"), ValidationError);
  EXPECT_THROW(Date(2001, 2, 29), ValidationError);
}

TEST(Date, Weekends) {
  EXPECT_TRUE(Date(2006, 11, 25).is_weekend());   // Saturday
  EXPECT_TRUE(Date(2006, 11, 26).is_weekend());
  EXPECT_FALSE(Date(2006, 11, 27).is_weekend());
}

TEST(DateRange, ParsesAndChecksOrder) {
  const auto r = DateRange::parse("2007-02-27:2011-04-13");
  EXPECT_TRUE(r.contains(Date(2007, 2, 27)));
  EXPECT_TRUE(r.contains(Date(2011, 4, 13)));
  EXPECT_FALSE(r.contains(Date(2011, 4, 14)));
  EXPECT_EQ(r.str(), "2007-02-27:2011-04-13");
  EXPECT_THROW(DateRange::parse("2011-04-13:2007-02-27"), ValidationError);
  EXPECT_THROW(DateRange::parse("2007-02-27"), ValidationError);
}

TEST(Csv, ParsesAndReportsShapeErrors) {
  const auto t = csv::parse("a, b\n1,2\r\n\n3,4\n", "x.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.header[1], "b");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_DOUBLE_EQ(csv::to_double(t, 1, 0), 3.0);
  EXPECT_THROW(t.column("c"), ValidationError);
  EXPECT_THROW(csv::parse("a,b\n1\n", "x.csv"), ValidationError);
  EXPECT_THROW(csv::parse("", "x.csv"), ValidationError);
}

TEST(Csv, MissingCellsAndBadNumbers) {
  const auto t = csv::parse("a,b,c\n,NA,x\n", "x.csv");
  EXPECT_TRUE(std::isnan(csv::to_double(t, 0, 0)));
  EXPECT_TRUE(std::isnan(csv::to_double(t, 0, 1)));
  EXPECT_THROW(csv::to_double(t, 0, 2), ValidationError);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(csv::num(0.0), "0");
  EXPECT_EQ(csv::num(-0.0), "0");
  EXPECT_EQ(csv::num(0.1), "0.1");
  EXPECT_EQ(csv::num(1.0 / 3.0), "0.333333333333");
}

TEST(Csv, WriterRejectsSeparatorsAndAddsProvenance) {
  csv::Writer w({"a", "b"});
  EXPECT_THROW(w.row({"1,2", "3"}), Error);
  EXPECT_THROW(w.row({"1"}), Error);
  w.row({"1", "2"}).provenance("ingest", "abc");
  EXPECT_EQ(w.str(), "a,b,_stage,_config_hash\n1,2,ingest,abc\n");
}

TEST(Digest, KnownVectorAndAtomicWrite) {
  EXPECT_EQ(sha256("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto dir = golden::scratch_dir("digest");
  write_file(dir / "sub" / "f.txt", "hello");
  EXPECT_EQ(read_file(dir / "sub" / "f.txt"), "hello");
  EXPECT_EQ(sha256_file(dir / "sub" / "f.txt"), sha256("hello"));
  const auto before = sha256_tree(dir);
  write_file(dir / "sub" / "g.txt", "");
  EXPECT_NE(sha256_tree(dir), before);
  std::filesystem::remove_all(dir);
}
