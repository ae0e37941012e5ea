#include "dualtpd/config.hpp"

#include <gtest/gtest.h>

using namespace dualtpd;

TEST(Config, ParsesKeysCommentsAndOverrides)
{
    const auto cfg = KeyValueConfig::parse_string("# comment\n\n domain = disk \np=1.5\np = 4\nlevels = 32, 64 ,128\n");
    EXPECT_EQ(cfg.get_string("domain", ""), "disk");
    EXPECT_DOUBLE_EQ(cfg.get_double("p", 0.0), 4.0);
    EXPECT_EQ(cfg.get_double_list("levels"), (std::vector<double>{32, 64, 128}));
    EXPECT_EQ(cfg.to_line(), "domain=disk; p=4; levels=32, 64 ,128");
}

TEST(Config, Fallbacks)
{
    const auto cfg = KeyValueConfig::parse_string("");
    EXPECT_FALSE(cfg.has("x"));
    EXPECT_EQ(cfg.get_string("x", "y"), "y");
    EXPECT_DOUBLE_EQ(cfg.get_double("x", 2.5), 2.5);
    EXPECT_EQ(cfg.get_int("x", 7), 7);
    EXPECT_TRUE(cfg.get_bool("x", true));
    EXPECT_TRUE(cfg.get_list("x").empty());
}

TEST(Config, TypedGetters)
{
    const auto cfg = KeyValueConfig::parse_string("a = 12\nb = yes\nc = off\nd = 1e-4\n");
    EXPECT_EQ(cfg.get_int("a", 0), 12);
    EXPECT_TRUE(cfg.get_bool("b", false));
    EXPECT_FALSE(cfg.get_bool("c", true));
    EXPECT_DOUBLE_EQ(cfg.get_double("d", 0.0), 1e-4);
}

TEST(Config, Errors)
{
    EXPECT_THROW(KeyValueConfig::parse_string("no equals sign\n"), ConfigError);
    EXPECT_THROW(KeyValueConfig::parse_string(" = value\n"), ConfigError);
    const auto cfg = KeyValueConfig::parse_string("a = 1.5x\nb = maybe\nc = 3.0\n");
    EXPECT_THROW((void)cfg.get_double("a", 0.0), ConfigError);
    EXPECT_THROW((void)cfg.get_bool("b", false), ConfigError);
    EXPECT_THROW((void)cfg.get_int("c", 0), ConfigError);
    EXPECT_THROW(KeyValueConfig::load("/nonexistent/file.cfg"), ConfigError);
}
