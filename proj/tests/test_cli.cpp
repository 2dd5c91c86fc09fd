#include "tagshield/group_keydist.hpp"
#include "tagshield/otp_cipher.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace tagshield;

namespace {

struct Result {
  int status;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(TAGSHIELD_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tagshield-cli-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("group-gen") {
  TempDir dir;
  REQUIRE(run("--seed 5 group-gen --bits 128 --out " + (dir / "a.json")).status == 0);
  REQUIRE(run("--seed 5 group-gen --bits 128 --out " + (dir / "b.json")).status == 0);
  const auto text = slurp(dir / "a.json");
  CHECK(text == slurp(dir / "b.json"));
  auto g = GroupParams::from_json(text);
  CHECK(bit_length(g.p) == 128);
  CHECK(bit_length(g.q) == 127);

  auto small = run("--seed 3 group-gen --bits 8");
  REQUIRE(small.status == 0);
  auto p = GroupParams::from_json(small.out).p.get_ui();
  CHECK((p == 167 || p == 179 || p == 227));
}

TEST_CASE("exchange, seal and open") {
  TempDir dir;
  REQUIRE(run("--seed 1 group-gen --bits 128 --out " + (dir / "g.json")).status == 0);

  REQUIRE(run("--seed 2 exchange --n 3 --params " + (dir / "g.json") + " --out " + (dir / "k1") + " --transcript " +
              (dir / "t1"))
              .status == 0);
  REQUIRE(run("--seed 2 exchange --n 3 --params " + (dir / "g.json") + " --out " + (dir / "k2")).status == 0);
  CHECK(slurp(dir / "k1") == slurp(dir / "k2"));
  auto transcript = Transcript::from_json_lines(slurp(dir / "t1"));
  CHECK(transcript.messages.size() == 14);

  REQUIRE(run("--seed 9 exchange --n 64 --params " + (dir / "g.json") + " --out " + (dir / "k64") +
              " --transcript " + (dir / "t64"))
              .status == 0);
  auto big = slurp(dir / "t64");
  CHECK(std::count(big.begin(), big.end(), '\n') <= 320);

  CHECK(run("--seed 9 exchange --n 5 --threaded --params " + (dir / "g.json")).status == 0);
  CHECK(run("exchange --n 3 --params " + (dir / "missing.json")).status == 1);

  const std::string seal = "seal --tag 613 --tag-bits 10 --budget 24 --manifest photo --key " + (dir / "k1");
  auto r1 = run("--seed 10 " + seal + " --out " + (dir / "r1"));
  auto r2 = run("--seed 11 " + seal + " --out " + (dir / "r2"));
  REQUIRE(r1.status == 0);
  REQUIRE(r2.status == 0);
  auto rec1 = TagRecord::from_json_line(slurp(dir / "r1"));
  auto rec2 = TagRecord::from_json_line(slurp(dir / "r2"));
  CHECK(rec1.cipher_bits != rec2.cipher_bits);

  auto opened = run("open --record " + (dir / "r1") + " --key " + (dir / "k1"));
  CHECK(opened.status == 0);
  CHECK(opened.out == "613\n");

  // Wrong key: silently a different tag.
  { std::ofstream(dir / "wrong") << "0123456789abcdef\n"; }
  auto wrong = run("open --record " + (dir / "r1") + " --key " + (dir / "wrong"));
  CHECK(wrong.status == 0);
  CHECK(wrong.out != "613\n");

  { std::ofstream(dir / "bad") << "{\"manifest_id\": 3}\n"; }
  CHECK(run("open --record " + (dir / "bad") + " --key " + (dir / "k1")).status == 1);
  CHECK(run("seal --tag 613 --tag-bits 10 --budget 19 --manifest x --key " + (dir / "k1")).status == 1);
}

TEST_CASE("attack-curve") {
  auto a = run("--seed 4 attack-curve --b-list 4 --ratio-list 2,3 --samples 300 --seeds 2");
  auto b = run("--seed 4 attack-curve --b-list 4 --ratio-list 2,3 --samples 300 --seeds 2 --threads 2");
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 1 + 2 * 2 * 2);

  auto enc = run("--seed 4 attack-curve --b-list 4 --ratio-list 2 --samples 300 --seeds 1 --encrypted --pad-mode fixed");
  REQUIRE(enc.status == 0);
  CHECK(enc.out.find("quadratic,true,4,8,300,4,") != std::string::npos);

  CHECK(run("--seed 4 attack-curve --ratio-list \"\"").status == 1);
  CHECK(run("--seed 4 attack-curve --b-list 4 --ratio-list 1 --samples 300").status == 1);
  CHECK(run("attack-curve --pad-mode sometimes").status == 1);
}

TEST_CASE("gaussian-demo") {
  auto strong = run("--seed 1 gaussian-demo --rho 0.9 --sigma-h 0 --trials 100000");
  REQUIRE(strong.status == 0);
  CHECK(strong.out.find("\"var_ratio\": 0.1") != std::string::npos);
  auto none = run("--seed 1 gaussian-demo --rho 0 --trials 100000");
  REQUIRE(none.status == 0);
  CHECK(none.out.find("\"closed_form_ratio\": 1.0") != std::string::npos);
  CHECK(run("gaussian-demo --rho 1.5").status == 1);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run("").status == 1);
  CHECK(run("no-such-command").status == 1);
  CHECK(run("group-gen --bits 2").status == 1);
  CHECK(run("--help").status == 0);
}
