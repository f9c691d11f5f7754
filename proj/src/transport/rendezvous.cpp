#include "nezha/transport/rendezvous.hpp"

#include <sys/stat.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "nezha/core/error.hpp"

namespace nezha {

namespace fs = std::filesystem;

FileStore::FileStore(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw BindError("cannot create rendezvous dir " + dir_ + ": " + ec.message());
  }
}

std::string FileStore::resolveDir(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) {
    return explicit_dir;
  }
  if (const char* env = std::getenv("NEZHA_RENDEZVOUS_DIR"); env && *env) {
    return env;
  }
  return "/tmp/nezha-rendezvous-" + std::to_string(::getuid());
}

namespace {

std::string recordPath(const std::string& dir, int rank, int rail) {
  return dir + "/rank" + std::to_string(rank) + "_rail" + std::to_string(rail) + ".json";
}

}  // namespace

void FileStore::publish(const RendezvousRecord& record) {
  nlohmann::json j;
  j["rank"] = record.rank;
  j["rail"] = record.rail;
  j["addr"] = record.addr;
  const std::string path = recordPath(dir_, record.rank, record.rail);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      throw BindError("cannot write rendezvous record " + tmp);
    }
    out << j.dump();
  }
  // Atomic publish so a reader never sees a partial record.
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw BindError("cannot publish rendezvous record: " + ec.message());
  }
}

std::vector<RendezvousRecord> FileStore::waitForAll(int world_size,
                                                    const std::vector<int>& rails,
                                                    std::chrono::microseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::vector<RendezvousRecord> records;
  while (true) {
    records.clear();
    bool complete = true;
    for (int rank = 0; rank < world_size && complete; rank++) {
      for (int rail : rails) {
        std::ifstream in(recordPath(dir_, rank, rail));
        if (!in) {
          complete = false;
          break;
        }
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) {
          complete = false;
          break;
        }
        records.push_back({j.at("rank").get<int>(), j.at("rail").get<int>(),
                           j.at("addr").get<std::string>()});
      }
    }
    if (complete) {
      return records;
    }
    if (std::chrono::steady_clock::now() > deadline) {
      throw RendezvousTimeoutError("timed out waiting for peers in " + dir_);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

}  // namespace nezha
