import hashlib
import json

from turtlesmr.bft import BftOutput, Signature, SignedChain
from turtlesmr.chain import BOTTOM, Chain, Command
from turtlesmr.config import Codec
from turtlesmr.errors import DeferDecode, InvariantError, MalformedPayload
from turtlesmr.smr import RelativeChain, decodeRelative, encodeRelative


# Wire format of turtle messages.
#
# Messages are dicts of chains, signatures, signed chains and BFT outputs,
# written as compact JSON with sorted keys so equal messages always give
# equal bytes. Protocol objects are tagged with a "$t" key.
#
# Chains are written relative to the sender's last decided chain: the
# receiver fills the omitted prefix in from its own last upper bound.
# With the full codec every chain is written out completely.


class Key(object):
    TYPE = '$t'

    CHAIN = 'ch'
    SIGNATURE = 'sig'
    SIGNED_CHAIN = 'sc'
    OUTPUT = 'out'

    BASE = 'b'
    SUFFIX = 's'


class WireEncoder(json.JSONEncoder):
    # JSONEncoder for protocol objects. base is the chain the receiver is
    # assumed to know.

    def __init__(self, *args, base=BOTTOM, **kwargs):
        super(WireEncoder, self).__init__(*args, **kwargs)
        self.base = base

    def default(self, o):
        if isinstance(o, Chain):
            rc = encodeRelative(o, self.base)
            return {
                Key.TYPE: Key.CHAIN,
                Key.BASE: rc.baseLength,
                Key.SUFFIX: [[c.id, c.payload.hex()] for c in rc.suffix]}
        if isinstance(o, Signature):
            return {
                Key.TYPE: Key.SIGNATURE,
                'signer': o.signer,
                'digest': o.digest,
                'nonce': o.nonce}
        if isinstance(o, SignedChain):
            return {
                Key.TYPE: Key.SIGNED_CHAIN,
                'signer': o.signer,
                'chain': o.chain,
                'sig': o.signature}
        if isinstance(o, BftOutput):
            return {
                Key.TYPE: Key.OUTPUT,
                'i': o.turtleIndex,
                'd': o.decided,
                'u': o.upper,
                'kind': o.kind,
                'e': list(o.evidence)}
        return super(WireEncoder, self).default(o)


class Encoder(object):
    # Encodes message dicts into payload bytes.

    def __init__(self, base=BOTTOM, mode=Codec.RELATIVE, jsonEncoder=WireEncoder):
        self.base = base if mode == Codec.RELATIVE else BOTTOM
        self.jsonEncoder = jsonEncoder

    def encode(self, msg):
        return json.dumps(msg, cls=self.jsonEncoder, base=self.base, sort_keys=True,
            separators=(',', ':')).encode('utf-8')


class Decoder(object):
    # Decodes payload bytes back into message dicts.
    #
    # known is the receiver's last upper bound. A chain whose omitted
    # prefix is longer than known raises DeferDecode; anything else that
    # does not parse raises MalformedPayload.

    def __init__(self, known=BOTTOM):
        self.known = known

    def decode(self, payload):
        try:
            msg = json.loads(payload.decode('utf-8'), object_hook=self.objectHook)
        except (DeferDecode, MalformedPayload):
            raise
        except (ValueError, TypeError, KeyError, AttributeError, InvariantError) as e:
            raise MalformedPayload(str(e))
        if not isinstance(msg, dict):
            raise MalformedPayload('payload is not an object')
        return msg

    def objectHook(self, obj):
        # Nested objects are rebuilt first, so chains inside outputs and
        # signed chains are already Chain instances here.

        tag = obj.get(Key.TYPE)
        if tag is None:
            return obj
        if tag == Key.CHAIN:
            return self.decodeChain(obj)
        if tag == Key.SIGNATURE:
            return Signature(requireInt(obj['signer']), requireStr(obj['digest']),
                requireInt(obj['nonce']))
        if tag == Key.SIGNED_CHAIN:
            return SignedChain(requireInt(obj['signer']), obj['chain'], obj['sig'])
        if tag == Key.OUTPUT:
            evidence = obj['e']
            if not isinstance(evidence, list):
                raise MalformedPayload('evidence is not a list')
            return BftOutput(requireInt(obj['i']), requireChain(obj['d']),
                requireChain(obj['u']), requireStr(obj['kind']), evidence)
        raise MalformedPayload('unknown object tag {!r}'.format(tag))

    def decodeChain(self, obj):
        base = requireInt(obj[Key.BASE])
        suffix = obj[Key.SUFFIX]
        if base < 0 or not isinstance(suffix, list):
            raise MalformedPayload('bad relative chain')
        commands = []
        for entry in suffix:
            if not isinstance(entry, list) or len(entry) != 2:
                raise MalformedPayload('bad command entry')
            commands.append(Command(requireStr(entry[0]), bytes.fromhex(requireStr(entry[1]))))
        chain = decodeRelative(RelativeChain(base, tuple(commands)), self.known)
        if chain is None:
            raise DeferDecode(base, len(self.known))
        return chain


def requireInt(value):
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedPayload('expected an integer, got {!r}'.format(value))
    return value


def requireStr(value):
    if not isinstance(value, str):
        raise MalformedPayload('expected a string, got {!r}'.format(value))
    return value


def requireChain(value):
    if not isinstance(value, Chain):
        raise MalformedPayload('expected a chain')
    return value


def payloadDigest(payload):
    return hashlib.sha256(payload).hexdigest()
