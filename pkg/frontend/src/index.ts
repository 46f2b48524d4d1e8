export {
  ArrayType,
  Field,
  FieldType,
  FramingError,
  Message,
  NdArray,
  ScalarKind,
  Schema,
  SchemaError,
  TypeMismatchError,
  TypedArray,
  Value,
  canonicalString,
  decodePayload,
  declarationHash,
  encodePayload,
  fnv1a64,
  parseSchema,
  payloadSize,
  schemaHash,
} from "./schema.js";
export {
  Frame,
  HEADER_SIZE,
  MAGIC,
  MAX_TOPIC_BYTES,
  ProtocolError,
  VERSION,
  decodeFrame,
  decodeFramePrefix,
  encodeFrame,
} from "./wire.js";
export { DiscoveryClient, PublicationInfo } from "./discovery.js";
export {
  ClientPublisher,
  ClientSubscription,
  PublisherOptions,
  SubscriptionOptions,
} from "./client.js";
