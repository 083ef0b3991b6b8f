#include "pass/chain.hpp"

#include "pass/serialize.hpp"

namespace pass::chain {

using canonical::Json;

Json to_json(const ChainAction& a) {
  return Json{{"kind", "Transfer"},
              {"asset", a.asset.to_string()},
              {"amount", canonical::to_json(a.amount)},
              {"from", a.from.to_string()},
              {"to", a.to.to_string()},
              {"nonce", canonical::uint_to_json(a.nonce)}};
}

ChainAction action_from_json(const Json& j) {
  try {
    require(j.at("kind").get<std::string>() == "Transfer", ErrorKind::ParseError,
            "unknown chain action kind");
    return ChainAction{AssetId::parse(j.at("asset").get<std::string>()),
                       canonical::amount_from_json(j.at("amount")),
                       ExternalAddress::parse(j.at("from").get<std::string>()),
                       ExternalAddress::parse(j.at("to").get<std::string>()),
                       canonical::uint_from_json(j.at("nonce"))};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, e.what());
  }
}

Json to_json(const std::vector<ChainAction>& trace) {
  Json arr = Json::array();
  for (const auto& a : trace) arr.push_back(to_json(a));
  return arr;
}

Bytes signing_bytes(const ChainAction& a) {
  std::string s = canonical::dump(to_json(a));
  return Bytes(s.begin(), s.end());
}

SignedTx sign_tx(const ChainAction& a, const Signer& signer) {
  return SignedTx{a, signer.sign(signing_bytes(a))};
}

Amount SimChain::balance(const ExternalAddress& who, const AssetId& asset) const {
  auto it = balances_.find({who, asset});
  return it == balances_.end() ? Amount{} : it->second;
}

std::uint64_t SimChain::account_nonce(const ExternalAddress& who) const {
  auto it = accountNonce_.find(who);
  return it == accountNonce_.end() ? 0 : it->second;
}

void SimChain::move_value(const ExternalAddress& from, const ExternalAddress& to,
                          const AssetId& asset, Amount amount) {
  require(balance(from, asset) >= amount, ErrorKind::InsufficientOnChainBalance,
          from.to_string() + " holds less than " + std::to_string(amount.value()) + " of " +
              asset.to_string());
  if (asset.is_nft()) {
    auto owner = nftOwners_.find(asset);
    require(owner != nftOwners_.end() && owner->second == from,
            ErrorKind::InsufficientOnChainBalance, from.to_string() + " does not own " +
                                                       asset.to_string());
  }
  if (from == to) return;
  (void)(balance(to, asset) + amount);  // overflow check before any write
  auto src = balances_.find({from, asset});
  src->second -= amount;
  if (src->second.is_zero()) balances_.erase(src);
  balances_[{to, asset}] += amount;
  if (asset.is_nft()) nftOwners_[asset] = to;
}

void SimChain::faucet(const ExternalAddress& to, const AssetId& asset, Amount amount) {
  require(!amount.is_zero(), ErrorKind::ZeroAmount, "faucet amount must be positive");
  require(!asset.is_gsm(), ErrorKind::InvalidArgument, "GSM domains do not exist on-chain");
  if (asset.is_nft()) {
    require(amount == Amount(1), ErrorKind::UnitaryViolation, "NFTs mint one at a time");
    require(!nftOwners_.contains(asset), ErrorKind::NftAlreadyHeld,
            asset.to_string() + " already minted");
  }
  balances_[{to, asset}] += amount;
  if (asset.is_nft()) nftOwners_[asset] = to;
}

InboxEvent SimChain::external_deposit(const ExternalAddress& from, const ExternalAddress& to,
                                      const AssetId& asset, Amount amount) {
  require(!amount.is_zero(), ErrorKind::ZeroAmount, "deposit amount must be positive");
  require(!asset.is_gsm(), ErrorKind::InvalidArgument, "GSM domains do not exist on-chain");
  if (asset.is_nft()) {
    require(amount == Amount(1), ErrorKind::UnitaryViolation, "NFT deposits move one token");
    auto owner = nftOwners_.find(asset);
    require(owner == nftOwners_.end() || owner->second != to, ErrorKind::NftAlreadyHeld,
            asset.to_string() + " is already held by " + to.to_string());
  }
  move_value(from, to, asset, amount);
  depositLog_.push_back(DepositEvent{asset, amount, from, to});
  depositedTo_[{to, asset}] += amount;
  return InboxEvent{asset, amount, from};
}

Receipt SimChain::submit_tx(const SignedTx& tx) {
  const ChainAction& a = tx.action;
  Bytes msg = signing_bytes(a);
  require(verify_signature(a.from, msg, tx.signature), ErrorKind::BadSignature,
          "signature does not verify under " + a.from.to_string());
  const std::uint64_t expected = account_nonce(a.from);
  require(a.nonce == expected, ErrorKind::NonceMismatch,
          "nonce " + std::to_string(a.nonce) + " but account expects " +
              std::to_string(expected));
  require(!a.amount.is_zero(), ErrorKind::ZeroAmount, "transfer amount must be positive");
  move_value(a.from, a.to, a.asset, a.amount);

  accountNonce_[a.from] = expected + 1;
  sentFrom_[{a.from, a.asset}] += a.amount;
  txLog_.push_back(a);

  Bytes hashed = msg;
  hashed.insert(hashed.end(), tx.signature.begin(), tx.signature.end());
  return Receipt{txLog_.size() - 1, a.nonce, sha256(hashed)};
}

Amount SimChain::ext_dep(const AssetId& asset, const ExternalAddress& pk) const {
  auto in = depositedTo_.find({pk, asset});
  auto out = sentFrom_.find({pk, asset});
  Amount deposited = in == depositedTo_.end() ? Amount{} : in->second;
  Amount sent = out == sentFrom_.end() ? Amount{} : out->second;
  // Sends above deposits can only come from faucet value, which is not
  // counted as a deposit.
  return deposited >= sent ? deposited - sent : Amount{};
}

Json SimChain::to_json() const {
  Json balances = Json::array();
  for (const auto& [key, amount] : balances_) {
    if (amount.is_zero()) continue;
    balances.push_back(Json{{"address", key.first.to_string()},
                            {"asset", key.second.to_string()},
                            {"amount", canonical::to_json(amount)}});
  }
  Json nonces = Json::object();
  for (const auto& [addr, n] : accountNonce_) nonces[addr.to_string()] = canonical::uint_to_json(n);
  Json deposits = Json::array();
  for (const auto& d : depositLog_) {
    deposits.push_back(Json{{"asset", d.asset.to_string()},
                            {"amount", canonical::to_json(d.amount)},
                            {"from", d.from.to_string()},
                            {"to", d.to.to_string()}});
  }
  Json owners = Json::object();
  for (const auto& [asset, owner] : nftOwners_) owners[asset.to_string()] = owner.to_string();
  return Json{{"balances", std::move(balances)},
              {"accountNonce", std::move(nonces)},
              {"txLog", chain::to_json(txLog_)},
              {"depositLog", std::move(deposits)},
              {"nftOwners", std::move(owners)}};
}

SimChain SimChain::from_json(const Json& j) {
  try {
    SimChain c;
    for (const auto& b : j.at("balances")) {
      c.balances_[{ExternalAddress::parse(b.at("address").get<std::string>()),
                   AssetId::parse(b.at("asset").get<std::string>())}] =
          canonical::amount_from_json(b.at("amount"));
    }
    for (const auto& [addr, n] : j.at("accountNonce").items()) {
      c.accountNonce_[ExternalAddress::parse(addr)] = canonical::uint_from_json(n);
    }
    for (const auto& a : j.at("txLog")) {
      ChainAction action = action_from_json(a);
      c.sentFrom_[{action.from, action.asset}] += action.amount;
      c.txLog_.push_back(std::move(action));
    }
    for (const auto& d : j.at("depositLog")) {
      DepositEvent e{AssetId::parse(d.at("asset").get<std::string>()),
                     canonical::amount_from_json(d.at("amount")),
                     ExternalAddress::parse(d.at("from").get<std::string>()),
                     ExternalAddress::parse(d.at("to").get<std::string>())};
      c.depositedTo_[{e.to, e.asset}] += e.amount;
      c.depositLog_.push_back(std::move(e));
    }
    for (const auto& [asset, owner] : j.at("nftOwners").items()) {
      c.nftOwners_[AssetId::parse(asset)] = ExternalAddress::parse(owner.get<std::string>());
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, e.what());
  }
}

std::vector<ChainAction> external_trace(const PublicState& pub) {
  std::vector<ChainAction> trace;
  trace.reserve(pub.outbox.txs.size());
  for (const auto& t : pub.outbox.txs) {
    trace.push_back(ChainAction{t.asset, t.amount, pub.pk, t.extDst, t.nonce});
  }
  return trace;
}

bool observational_eq(const WalletState& a, const WalletState& b) {
  const PublicState pa = project_public(a);
  const PublicState pb = project_public(b);
  const bool equal = pa == pb;
  if (equal && external_trace(pa) != external_trace(pb)) {
    fail(ErrorKind::MalformedLog, "equal public states produced different external traces");
  }
  return equal;
}

void PlainEoa::deposit(const AssetId& asset, Amount amount) { balances_[asset] += amount; }

void PlainEoa::withdraw(const AssetId& asset, Amount amount, const ExternalAddress& extDst) {
  auto it = balances_.find(asset);
  require(it != balances_.end() && it->second >= amount, ErrorKind::InsufficientBalance,
          "EOA holds less than " + std::to_string(amount.value()) + " of " + asset.to_string());
  it->second -= amount;
  if (it->second.is_zero()) balances_.erase(it);
  sent_.push_back(OutboxEntry{asset, amount, extDst, sent_.size(), std::nullopt,
                              OutboxStatus::Pending});
}

std::vector<Receipt> PlainEoa::process(SimChain& chain, const Signer& signer) {
  std::vector<Receipt> receipts;
  while (nonce_ < sent_.size()) {
    OutboxEntry& e = sent_[nonce_];
    receipts.push_back(chain.submit_tx(sign_tx({e.asset, e.amount, pk_, e.extDst, e.nonce}, signer)));
    e.status = OutboxStatus::Broadcast;
    ++nonce_;
  }
  return receipts;
}

PublicState PlainEoa::public_state() const {
  PublicState pub;
  pub.pk = pk_;
  pub.outbox.txs = sent_;
  pub.outbox.nonce = nonce_;
  pub.assetTotals = balances_;
  return pub;
}

}  // namespace pass::chain
