#include "mocnn/worker.hpp"

#include "socket.hpp"

#include <list>
#include <thread>

namespace mocnn {

using protocol::Json;
using protocol::TransportError;

namespace {

constexpr auto kSlice = std::chrono::milliseconds(5);
constexpr auto kIdleConnection = std::chrono::hours(24);

void interruptibleSleep(std::chrono::milliseconds total, const std::function<bool()>& interrupted)
{
    const auto until = std::chrono::steady_clock::now() + total;
    while (true) {
        if (interrupted && interrupted()) {
            throw TransportError("interrupted");
        }
        const auto now = std::chrono::steady_clock::now();
        if (now >= until) {
            return;
        }
        std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(until - now, kSlice));
    }
}

} // namespace

WorkerCore::WorkerCore(std::shared_ptr<Evaluator> evaluator, WorkerOptions options)
    : evaluator_(std::move(evaluator)), options_(std::move(options))
{
    if (!evaluator_) {
        throw std::invalid_argument("worker needs an evaluator");
    }
}

Json WorkerCore::handle(const Json& request, const std::function<bool()>& interrupted)
{
    const auto type = protocol::typeOf(request);
    if (type == "PING") {
        return protocol::pong();
    }
    if (type != "EVALUATE") {
        return protocol::error(std::nullopt, "unexpected message type " + type);
    }
    if (!request.contains("jobId") || !request["jobId"].is_number_unsigned()) {
        return protocol::error(std::nullopt, "EVALUATE without a valid jobId");
    }
    const auto jobId = request["jobId"].get<std::uint64_t>();

    std::lock_guard slot(slot_);
    try {
        const auto space = protocol::spaceFromJson(request.at("space"));
        const auto key = request.at("genotype").get<std::vector<int>>();
        const auto decoded = DecodedGenotype::fromKey(key);
        validate(decoded, space);
        const auto pause = options_.delayForJob ? options_.delayForJob(jobId) : options_.delay;
        if (pause.count() > 0) {
            interruptibleSleep(pause, interrupted);
        }
        const auto r = evaluator_->evaluate(decoded, space);
        ++evaluations_;
        return protocol::result(jobId, r.accuracy, r.bestEpoch);
    } catch (const TransportError&) {
        throw;
    } catch (const std::exception& e) {
        return protocol::error(jobId, e.what());
    }
}

// ---------------------------------------------------------------------------

struct WorkerServer::Impl {
    Impl(std::string bind, std::shared_ptr<Evaluator> evaluator, WorkerOptions options)
        : bindAddress(net::parseHostPort(bind)), core(std::move(evaluator), std::move(options))
    {
    }

    struct Connection {
        std::thread thread;
        std::shared_ptr<std::atomic<bool>> done;
    };

    net::HostPort bindAddress;
    WorkerCore core;
    net::Listener listener;
    std::atomic<std::uint16_t> port{0};
    std::atomic<bool> stopping{false};
    std::mutex bindLock;
    bool bound = false;
    std::thread acceptThread;
    std::list<Connection> connections;

    void bind()
    {
        std::lock_guard lock(bindLock);
        if (!bound) {
            listener = net::Listener::bind(bindAddress);
            port = listener.port();
            bound = true;
        }
    }

    void reap(bool all)
    {
        for (auto it = connections.begin(); it != connections.end();) {
            if (all || it->done->load()) {
                it->thread.join();
                it = connections.erase(it);
            } else {
                ++it;
            }
        }
    }

    void acceptLoop()
    {
        while (!stopping) {
            auto s = listener.accept(std::chrono::milliseconds(50));
            reap(false);
            if (!s) {
                continue;
            }
            auto done = std::make_shared<std::atomic<bool>>(false);
            connections.push_back({std::thread([this, done, sock = std::move(*s)]() mutable {
                                       converse(sock);
                                       *done = true;
                                   }),
                                   done});
        }
        reap(true);
    }

    void converse(net::Socket& s)
    {
        const auto interrupted = [this] { return stopping.load(); };
        try {
            while (!stopping) {
                std::optional<std::string> payload;
                Json reply;
                bool closeAfter = false;
                try {
                    payload = net::readFrame(s, net::Clock::now() + kIdleConnection, &stopping);
                    if (!payload) {
                        return;
                    }
                    reply = core.handle(protocol::decodePayload(*payload), interrupted);
                } catch (const protocol::MalformedFrame& e) {
                    reply = protocol::error(std::nullopt, e.what());
                    closeAfter = true;
                }
                net::writeFrame(s, reply, net::Clock::now() + std::chrono::seconds(30), &stopping);
                if (closeAfter) {
                    return;
                }
            }
        } catch (const std::exception&) {
            // broken connection or shutdown; the server carries on
        }
    }
};

WorkerServer::WorkerServer(std::string bindAddress, std::shared_ptr<Evaluator> evaluator, WorkerOptions options)
    : impl_(std::make_unique<Impl>(std::move(bindAddress), std::move(evaluator), std::move(options)))
{
}

WorkerServer::~WorkerServer()
{
    stop();
}

void WorkerServer::start()
{
    impl_->bind();
    impl_->acceptThread = std::thread([this] { impl_->acceptLoop(); });
}

void WorkerServer::serve()
{
    impl_->bind();
    impl_->acceptLoop();
}

void WorkerServer::stop()
{
    impl_->stopping = true;
    if (impl_->acceptThread.joinable()) {
        impl_->acceptThread.join();
    }
    impl_->listener.close();
}

std::uint16_t WorkerServer::port() const
{
    return impl_->port.load();
}

std::string WorkerServer::address() const
{
    const auto host = impl_->bindAddress.host == "0.0.0.0" || impl_->bindAddress.host == "*"
                          ? std::string("127.0.0.1")
                          : impl_->bindAddress.host;
    return host + ":" + std::to_string(port());
}

// ---------------------------------------------------------------------------

InProcessWorker::InProcessWorker(std::shared_ptr<Evaluator> evaluator, WorkerOptions options, std::string name)
    : core_(std::move(evaluator), std::move(options)), name_(std::move(name))
{
}

Json InProcessWorker::call(const Json& request, std::chrono::milliseconds timeout)
{
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    const auto gone = [this] { return killed_.load() || cancelled_.load(); };
    if (gone()) {
        throw TransportError(name_ + ": unreachable");
    }
    const auto frame = protocol::encodeFrame(request);
    const auto received = protocol::decodePayload(std::string_view(frame).substr(protocol::kHeaderBytes));

    const auto expired = [&] { return std::chrono::steady_clock::now() >= deadline; };
    Json reply;
    try {
        reply = core_.handle(received, [&] { return gone() || expired(); });
    } catch (const TransportError&) {
        if (!gone() && expired()) {
            throw TransportError(name_ + ": timed out");
        }
        throw TransportError(name_ + ": died before replying");
    }
    if (gone()) {
        throw TransportError(name_ + ": died before replying");
    }
    if (expired()) {
        throw TransportError(name_ + ": timed out");
    }
    const auto back = protocol::encodeFrame(reply);
    return protocol::decodePayload(std::string_view(back).substr(protocol::kHeaderBytes));
}

} // namespace mocnn
