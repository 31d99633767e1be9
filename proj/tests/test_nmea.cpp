#include <gtest/gtest.h>

#include <random>
#include <string>

#include "greenwave/nmea.hpp"
#include "support/oracles.hpp"

using namespace greenwave;
using namespace greenwave::nmea;

namespace {

constexpr const char* kGga = "$GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,*47";
constexpr const char* kGgaPayload = "GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,";

std::string with_checksum(const std::string& payload) {
  char buf[4];
  std::snprintf(buf, sizeof buf, "%02X", oracle::xor_checksum(payload));
  return "$" + payload + "*" + buf;
}

}  // namespace

TEST(Checksum, EmptyPayloadIsZero) { EXPECT_EQ(checksum(""), 0x00); }

TEST(Checksum, CanonicalGgaMatchesOracle) {
  EXPECT_EQ(oracle::xor_checksum(kGgaPayload), 0x47u);
  EXPECT_EQ(checksum(kGgaPayload), 0x47);
}

TEST(Checksum, RepeatedPayloadCancels) {
  const std::string p = kGgaPayload;
  EXPECT_EQ(checksum(p + p), 0x00);
}

TEST(Checksum, IsComputableAtCompileTime) { static_assert(checksum("AB") == ('A' ^ 'B')); }

TEST(DecimalDegrees, ZeroIsZero) { EXPECT_DOUBLE_EQ(*to_decimal_degrees("0000.000", 'N'), 0.0); }

TEST(DecimalDegrees, LatitudeMatchesHandOracle) {
  const double expected = oracle::hand_degrees("4807.038", 2, 'N');
  EXPECT_NEAR(expected, 48.1173, 1e-9);
  EXPECT_NEAR(*to_decimal_degrees("4807.038", 'N'), expected, 1e-9);
}

TEST(DecimalDegrees, LongitudeMatchesHandOracle) {
  const double expected = oracle::hand_degrees("01131.000", 3, 'E');
  EXPECT_NEAR(expected, 11.516667, 1e-6);
  EXPECT_NEAR(*to_decimal_degrees("01131.000", 'E'), expected, 1e-9);
}

TEST(DecimalDegrees, SouthAndWestAreNegative) {
  EXPECT_NEAR(*to_decimal_degrees("4807.038", 'S'), -48.1173, 1e-9);
  EXPECT_NEAR(*to_decimal_degrees("01131.000", 'W'), -11.516667, 1e-6);
}

TEST(DecimalDegrees, RejectsBadMinutesWidthAndText) {
  EXPECT_EQ(to_decimal_degrees("4860.000", 'N').error(), NmeaError::MalformedCoordinate);
  EXPECT_EQ(to_decimal_degrees("480.0", 'N').error(), NmeaError::MalformedCoordinate);
  EXPECT_EQ(to_decimal_degrees("48a7.038", 'N').error(), NmeaError::MalformedCoordinate);
  EXPECT_EQ(to_decimal_degrees("4807.038", 'Q').error(), NmeaError::MalformedCoordinate);
  EXPECT_EQ(to_decimal_degrees("9107.000", 'N').error(), NmeaError::MalformedCoordinate);
}

TEST(ParseSentence, CanonicalGga) {
  const auto r = parse_sentence(std::string_view(kGga));
  const auto* p = std::get_if<GeoPosition>(&r);
  ASSERT_NE(p, nullptr);
  EXPECT_NEAR(p->latitude, oracle::hand_degrees("4807.038", 2, 'N'), 1e-6);
  EXPECT_NEAR(p->longitude, oracle::hand_degrees("01131.000", 3, 'E'), 1e-6);
  EXPECT_EQ(p->fix_quality, 1);
  EXPECT_EQ(p->satellites, 8);
  EXPECT_DOUBLE_EQ(p->hdop, 0.9);
  ASSERT_TRUE(p->altitude_m.has_value());
  EXPECT_DOUBLE_EQ(*p->altitude_m, 545.4);
  EXPECT_DOUBLE_EQ(p->utc_time, 12 * 3600 + 35 * 60 + 19);
  EXPECT_EQ(p->source_sentence, SentenceType::GGA);
}

TEST(ParseSentence, AlteredChecksumDigitIsRejected) {
  std::string s = kGga;
  s.back() = '8';
  EXPECT_EQ(std::get<NmeaError>(parse_sentence(std::string_view(s))), NmeaError::ChecksumMismatch);
}

TEST(ParseSentence, GsvWithValidChecksumIsUnsupported) {
  const std::string gsv = with_checksum("GPGSV,3,1,11,03,03,111,00,04,15,270,00,06,01,010,00,13,06,292,00");
  const auto r = parse_sentence(std::string_view(gsv));
  ASSERT_TRUE(std::holds_alternative<Unsupported>(r));
  EXPECT_EQ(std::get<Unsupported>(r).sentence_type, "GPGSV");
}

TEST(ParseSentence, MissingChecksumIsAccepted) {
  const RawSentence raw = RawSentence::from_text(std::string("$") + kGgaPayload);
  EXPECT_FALSE(raw.checksum_present);
  EXPECT_TRUE(std::holds_alternative<GeoPosition>(parse_sentence(raw)));
}

TEST(ParseSentence, TalkerIdIsIgnored) {
  const std::string gn = with_checksum("GNGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,");
  EXPECT_TRUE(std::holds_alternative<GeoPosition>(parse_sentence(std::string_view(gn))));
}

TEST(ParseSentence, RmcActiveAndVoid) {
  const std::string active = with_checksum("GPRMC,123519,A,4807.038,N,01131.000,E,022.4,084.4,230394,003.1,W");
  const auto a = parse_sentence(std::string_view(active));
  ASSERT_TRUE(std::holds_alternative<GeoPosition>(a));
  EXPECT_EQ(std::get<GeoPosition>(a).source_sentence, SentenceType::RMC);
  EXPECT_GE(std::get<GeoPosition>(a).fix_quality, 1);
  EXPECT_NEAR(std::get<GeoPosition>(a).latitude, 48.1173, 1e-6);

  const std::string with_mode = with_checksum("GPRMC,123519,A,4807.038,N,01131.000,E,022.4,084.4,230394,003.1,W,A");
  EXPECT_TRUE(std::holds_alternative<GeoPosition>(parse_sentence(std::string_view(with_mode))));

  const std::string void_fix = with_checksum("GPRMC,123519,V,4807.038,N,01131.000,E,022.4,084.4,230394,003.1,W");
  const auto v = parse_sentence(std::string_view(void_fix));
  ASSERT_TRUE(std::holds_alternative<GeoPosition>(v));
  EXPECT_EQ(std::get<GeoPosition>(v).fix_quality, 0);
  EXPECT_FALSE(std::get<GeoPosition>(v).has_fix());
}

TEST(ParseSentence, WrongTokenCountIsMalformedField) {
  const std::string short_gga = with_checksum("GPGGA,123519,4807.038,N,01131.000,E,1,08");
  EXPECT_EQ(std::get<NmeaError>(parse_sentence(std::string_view(short_gga))), NmeaError::MalformedField);
}

TEST(ParseSentence, BadNumberIsMalformedField) {
  const std::string bad = with_checksum("GPGGA,123519,4807.038,N,01131.000,E,1,xx,0.9,545.4,M,46.9,M,,");
  EXPECT_EQ(std::get<NmeaError>(parse_sentence(std::string_view(bad))), NmeaError::MalformedField);
}

TEST(ParseSentence, EverySingleByteCorruptionIsRejected) {
  const std::string s = kGga;
  const std::size_t star = s.find('*');
  int checked = 0;
  for (std::size_t i = 1; i < star; ++i) {
    for (int bit = 0; bit < 7; ++bit) {
      std::string c = s;
      c[i] = static_cast<char>(c[i] ^ (1 << bit));
      if (c[i] == '*' || c[i] == '$' || c[i] < 0x20 || c[i] > 0x7e) continue;
      ++checked;
      const auto r = parse_sentence(std::string_view(c));
      ASSERT_TRUE(std::holds_alternative<NmeaError>(r)) << c;
      EXPECT_EQ(std::get<NmeaError>(r), NmeaError::ChecksumMismatch) << c;
    }
  }
  EXPECT_GT(checked, 300);
}

TEST(FrameBuffer, TwoSentencesInOneChunk) {
  FrameBuffer fb;
  const auto out = fb.feed_bytes(std::string(kGga) + "\r\n" + kGga + "\n");
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].text, kGga);
  EXPECT_EQ(out[1].text, kGga);
}

TEST(FrameBuffer, SplitAcrossThreeChunks) {
  FrameBuffer fb;
  const std::string s = std::string(kGga) + "\r\n";
  EXPECT_TRUE(fb.feed_bytes(s.substr(0, 10)).empty());
  EXPECT_TRUE(fb.feed_bytes(s.substr(10, 30)).empty());
  const auto out = fb.feed_bytes(s.substr(40));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].text, kGga);
}

TEST(FrameBuffer, LeadingNoiseIsDiscarded) {
  FrameBuffer fb;
  const auto out = fb.feed_bytes(std::string("garbage\x01\x02") + kGga + "\r\n");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].text, kGga);
}

TEST(FrameBuffer, OverlongFrameIsCountedAndDropped) {
  FrameBuffer fb;
  const auto out = fb.feed_bytes("$" + std::string(199, 'A'));
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(fb.overflow_count(), 1u);
  EXPECT_LE(fb.pending_size(), 82u);
  const auto next = fb.feed_bytes(std::string("\r\n") + kGga + "\r\n");
  ASSERT_EQ(next.size(), 1u);
  EXPECT_EQ(next[0].text, kGga);
}

TEST(FrameBuffer, AnyChunkingYieldsTheSameSentences) {
  const std::string stream = std::string("xx") + kGga + "\r\n$GPGSV,1,1*00\n" + kGga + "\r\n$GPRMC,1";
  FrameBuffer whole;
  std::vector<std::string> expected;
  for (const auto& r : whole.feed_bytes(stream)) expected.push_back(r.text);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    FrameBuffer fb;
    std::vector<std::string> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const std::size_t n = 1 + rng() % 17;
      for (const auto& r : fb.feed_bytes(stream.substr(pos, n))) got.push_back(r.text);
      pos += n;
    }
    ASSERT_EQ(got, expected);
  }
}

TEST(RoundTrip, FormattedGgaParsesBackWithinMicrodegree) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-89.999, 89.999), lon(-179.999, 179.999);
  for (int i = 0; i < 5000; ++i) {
    GeoPosition p;
    p.latitude = lat(rng);
    p.longitude = lon(rng);
    p.utc_time = static_cast<double>(rng() % 86400);
    p.fix_quality = 1;
    p.satellites = 7;
    p.hdop = 1.2;
    const std::string s = format_gga(p);
    EXPECT_EQ(static_cast<unsigned>(checksum(std::string_view(s).substr(1, s.find('*') - 1))),
              oracle::xor_checksum(s));
    const auto r = parse_sentence(std::string_view(s));
    ASSERT_TRUE(std::holds_alternative<GeoPosition>(r)) << s;
    EXPECT_NEAR(std::get<GeoPosition>(r).latitude, p.latitude, 1e-6) << s;
    EXPECT_NEAR(std::get<GeoPosition>(r).longitude, p.longitude, 1e-6) << s;
  }
}

TEST(Fuzz, ArbitraryBytesNeverAbort) {
  std::mt19937_64 rng(99);
  FrameBuffer fb;
  const std::string alphabet = "$*,.0123456789ABCDEFGNPRMSWVQ\r\n \x01\xff";
  for (int i = 0; i < 20000; ++i) {
    std::string line;
    const std::size_t len = rng() % 100;
    for (std::size_t k = 0; k < len; ++k) {
      line += (rng() % 4 == 0) ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()];
    }
    const auto r = parse_sentence(std::string_view(line));
    EXPECT_EQ(r.index() <= 2, true);
    for (const auto& raw : fb.feed_bytes(line)) (void)parse_sentence(raw);
  }
}
