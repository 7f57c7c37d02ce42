#include "mocnn/worker.hpp"

#include "socket.hpp"

#include <doctest.h>

#include <stdexcept>
#include <thread>

using namespace mocnn;
using namespace std::chrono_literals;
using protocol::Json;

namespace {

const std::vector<int> kDenseNet121{6, 32, 12, 32, 24, 32, 16, 32};

class ThrowingEvaluator final : public Evaluator {
public:
    AccuracyResult evaluate(const DecodedGenotype&, const SearchSpace&) override
    {
        throw std::runtime_error("out of memory");
    }
    std::string id() const override { return "throwing"; }
};

Json roundTrip(net::Socket& s, const Json& request)
{
    const auto deadline = net::Clock::now() + 5s;
    net::writeFrame(s, request, deadline);
    auto payload = net::readFrame(s, deadline);
    REQUIRE(payload.has_value());
    return protocol::decodePayload(*payload);
}

net::Socket connectTo(const WorkerServer& server)
{
    return net::Socket::connect(net::parseHostPort(server.address()), net::Clock::now() + 5s);
}

} // namespace

TEST_CASE("core answers PING with PONG")
{
    WorkerCore core(std::make_shared<SurrogateEvaluator>());
    CHECK(core.handle(protocol::ping()) == protocol::pong());
    CHECK(core.evaluations() == 0);
}

TEST_CASE("core evaluates with the surrogate")
{
    WorkerCore core(std::make_shared<SurrogateEvaluator>());
    const auto space = SearchSpace::defaultSpace();
    const auto reply = core.handle(protocol::evaluateRequest(11, kDenseNet121, space));
    REQUIRE(protocol::typeOf(reply) == "RESULT");
    CHECK(reply["jobId"] == 11);
    const auto d = DecodedGenotype::fromKey(kDenseNet121);
    CHECK(reply["accuracy"].get<double>() == surrogateAccuracy(d, space));
    CHECK(reply["bestEpoch"].get<int>() == SurrogateEvaluator().evaluate(d, space).bestEpoch);
    CHECK(core.evaluations() == 1);
}

TEST_CASE("evaluator failures become ERROR replies carrying the job id")
{
    WorkerCore core(std::make_shared<ThrowingEvaluator>());
    const auto reply = core.handle(protocol::evaluateRequest(5, kDenseNet121, SearchSpace::defaultSpace()));
    CHECK(protocol::typeOf(reply) == "ERROR");
    CHECK(reply["jobId"] == 5);
    CHECK(reply["message"].get<std::string>().find("out of memory") != std::string::npos);
    CHECK(core.evaluations() == 0);
}

TEST_CASE("invalid requests")
{
    WorkerCore core(std::make_shared<SurrogateEvaluator>());
    const auto space = SearchSpace::defaultSpace();

    SUBCASE("unexpected type")
    {
        const auto reply = core.handle(protocol::pong());
        CHECK(protocol::typeOf(reply) == "ERROR");
        CHECK(reply["jobId"].is_null());
    }
    SUBCASE("missing job id")
    {
        auto req = protocol::evaluateRequest(1, kDenseNet121, space);
        req.erase("jobId");
        CHECK(core.handle(req)["jobId"].is_null());
        req["jobId"] = "seven";
        CHECK(core.handle(req)["jobId"].is_null());
    }
    SUBCASE("genotype outside the space")
    {
        const auto reply = core.handle(protocol::evaluateRequest(2, {6, 32, 12, 32, 30, 32, 16, 32}, space));
        CHECK(protocol::typeOf(reply) == "ERROR");
        CHECK(reply["jobId"] == 2);
    }
    SUBCASE("genotype of the wrong length")
    {
        const auto reply = core.handle(protocol::evaluateRequest(3, {6, 32, 12}, space));
        CHECK(protocol::typeOf(reply) == "ERROR");
        CHECK(reply["jobId"] == 3);
    }
    SUBCASE("broken space")
    {
        auto req = protocol::evaluateRequest(4, kDenseNet121, space);
        req["space"]["numBlocks"] = 2;
        const auto reply = core.handle(req);
        CHECK(protocol::typeOf(reply) == "ERROR");
        CHECK(reply["jobId"] == 4);
    }
    CHECK(core.evaluations() == 0);
}

TEST_CASE("delay can be interrupted")
{
    WorkerOptions options;
    options.delay = 10s;
    WorkerCore core(std::make_shared<SurrogateEvaluator>(), options);
    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(core.handle(protocol::evaluateRequest(1, kDenseNet121, SearchSpace::defaultSpace()),
                                [] { return true; }),
                    protocol::TransportError);
    CHECK(std::chrono::steady_clock::now() - start < 1s);
}

TEST_CASE("in-process worker")
{
    WorkerOptions options;
    options.delayForJob = [](std::uint64_t id) { return std::chrono::milliseconds(id == 9 ? 400 : 0); };
    InProcessWorker worker(std::make_shared<SurrogateEvaluator>(), options, "w0");
    const auto space = SearchSpace::defaultSpace();

    CHECK(worker.address() == "w0");
    CHECK(worker.call(protocol::ping(), 1s) == protocol::pong());
    const auto reply = worker.call(protocol::evaluateRequest(1, kDenseNet121, space), 1s);
    CHECK(protocol::typeOf(reply) == "RESULT");
    CHECK(worker.evaluations() == 1);

    SUBCASE("timeout")
    {
        CHECK_THROWS_WITH_AS(worker.call(protocol::evaluateRequest(9, kDenseNet121, space), 50ms),
                             doctest::Contains("timed out"), protocol::TransportError);
    }
    SUBCASE("killed mid-job")
    {
        std::thread killer([&] {
            std::this_thread::sleep_for(50ms);
            worker.kill();
        });
        const auto start = std::chrono::steady_clock::now();
        CHECK_THROWS_AS(worker.call(protocol::evaluateRequest(9, kDenseNet121, space), 5s), protocol::TransportError);
        CHECK(std::chrono::steady_clock::now() - start < 350ms);
        killer.join();
        CHECK_FALSE(worker.alive());
        CHECK_THROWS_AS(worker.call(protocol::ping(), 1s), protocol::TransportError);
        worker.revive();
        CHECK(worker.call(protocol::ping(), 1s) == protocol::pong());
    }
    SUBCASE("cancelled")
    {
        worker.cancel();
        CHECK_THROWS_AS(worker.call(protocol::ping(), 1s), protocol::TransportError);
    }
    CHECK(worker.evaluations() == 1);
}

TEST_CASE("TCP server speaks the framed protocol")
{
    WorkerServer server("127.0.0.1:0", std::make_shared<SurrogateEvaluator>());
    server.start();
    REQUIRE(server.port() != 0);
    CHECK(server.address() == "127.0.0.1:" + std::to_string(server.port()));

    auto s = connectTo(server);
    CHECK(roundTrip(s, protocol::ping()) == protocol::pong());
    const auto space = SearchSpace::defaultSpace();
    const auto reply = roundTrip(s, protocol::evaluateRequest(3, kDenseNet121, space));
    CHECK(protocol::typeOf(reply) == "RESULT");
    CHECK(reply["jobId"] == 3);
    CHECK(roundTrip(s, protocol::ping()) == protocol::pong());
    server.stop();
}

TEST_CASE("oversized frame header is answered with ERROR and the connection closes")
{
    WorkerServer server("127.0.0.1:0", std::make_shared<SurrogateEvaluator>());
    server.start();

    auto s = connectTo(server);
    const auto deadline = net::Clock::now() + 5s;
    s.sendAll(std::string("\x80\x00\x00\x00", 4), deadline);
    auto payload = net::readFrame(s, deadline);
    REQUIRE(payload.has_value());
    const auto reply = protocol::decodePayload(*payload);
    CHECK(protocol::typeOf(reply) == "ERROR");
    CHECK(reply["jobId"].is_null());
    CHECK_FALSE(net::readFrame(s, deadline).has_value());

    auto again = connectTo(server);
    CHECK(roundTrip(again, protocol::ping()) == protocol::pong());
}

TEST_CASE("garbage payload is answered with ERROR")
{
    WorkerServer server("127.0.0.1:0", std::make_shared<SurrogateEvaluator>());
    server.start();
    auto s = connectTo(server);
    const std::string body = "not json";
    std::string frame(4, '\0');
    frame[3] = static_cast<char>(body.size());
    s.sendAll(frame + body, net::Clock::now() + 5s);
    auto payload = net::readFrame(s, net::Clock::now() + 5s);
    REQUIRE(payload.has_value());
    CHECK(protocol::typeOf(protocol::decodePayload(*payload)) == "ERROR");
}

TEST_CASE("network and in-process workers give identical replies")
{
    auto evaluator = std::make_shared<SurrogateEvaluator>();
    WorkerServer server("127.0.0.1:0", evaluator);
    server.start();
    TcpWorkerLink tcp(server.address());
    InProcessWorker local(evaluator);

    auto space = SearchSpace::defaultSpace();
    const std::vector<std::vector<int>> genotypes{
        kDenseNet121, {4, 12, 4, 12, 4, 12, 4, 12}, {5, 20, 9, 31, 17, 14, 11, 26}};
    std::uint64_t id = 100;
    for (const auto& g : genotypes) {
        const auto request = protocol::evaluateRequest(id++, g, space);
        const auto a = tcp.call(request, 5s);
        const auto b = local.call(request, 5s);
        CHECK(protocol::typeOf(a) == "RESULT");
        CHECK(a == b);
        CHECK(a.dump() == b.dump());
    }
    const auto bad = protocol::evaluateRequest(1, {1, 1, 1, 1, 1, 1, 1, 1}, space);
    CHECK(tcp.call(bad, 5s) == local.call(bad, 5s));
}

TEST_CASE("TCP link to a closed port fails with a transport error")
{
    std::uint16_t port = 0;
    {
        WorkerServer server("127.0.0.1:0", std::make_shared<SurrogateEvaluator>());
        server.start();
        port = server.port();
    }
    TcpWorkerLink link("127.0.0.1:" + std::to_string(port));
    CHECK_THROWS_AS(link.call(protocol::ping(), 500ms), protocol::TransportError);
}
