// Reads {"contracts": {name: source}} JSON on stdin, prints solc storageLayout per contract.
const solc = require('solc');
let raw = '';
process.stdin.on('data', d => raw += d);
process.stdin.on('end', () => {
  const req = JSON.parse(raw);
  const sources = {};
  for (const [name, src] of Object.entries(req.contracts)) sources[name + '.sol'] = { content: src };
  const input = {
    language: 'Solidity', sources,
    settings: { outputSelection: { '*': { '*': ['storageLayout', 'evm.bytecode.object'] } } },
  };
  const out = JSON.parse(solc.compile(JSON.stringify(input)));
  const errors = (out.errors || []).filter(e => e.severity === 'error');
  if (errors.length) { console.error(JSON.stringify(errors, null, 1)); process.exit(1); }
  const res = { compiler: solc.version(), contracts: {} };
  for (const name of Object.keys(req.contracts)) {
    const c = out.contracts[name + '.sol'][name];
    res.contracts[name] = {
      storage: c.storageLayout.storage.map(s => ({ label: s.label, slot: s.slot, offset: s.offset, type: s.type })),
      bytecode: c.evm.bytecode.object,
    };
  }
  process.stdout.write(JSON.stringify(res));
});
